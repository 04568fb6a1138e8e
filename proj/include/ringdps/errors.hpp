#pragma once

#include <stdexcept>
#include <string>

namespace ringdps {

// Exit codes used by the CLI; exceptions carry the matching code so main()
// can translate without a taxonomy switch.
enum class exit_code : int {
    ok = 0,
    usage = 1,
    missing_file = 2,
    syntax = 3,
    unknown_key = 4,
    invariant = 5,
    io_failure = 6,
    fit_failure = 7,
};

class error : public std::runtime_error {
public:
    error(exit_code code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    exit_code code() const noexcept { return code_; }

private:
    exit_code code_;
};

struct missing_file_error : error {
    explicit missing_file_error(const std::string& w) : error(exit_code::missing_file, w) {}
};
struct syntax_error : error {
    explicit syntax_error(const std::string& w) : error(exit_code::syntax, w) {}
};
struct unknown_key_error : error {
    explicit unknown_key_error(const std::string& w) : error(exit_code::unknown_key, w) {}
};
struct invariant_error : error {
    explicit invariant_error(const std::string& w) : error(exit_code::invariant, w) {}
};
struct io_error : error {
    explicit io_error(const std::string& w) : error(exit_code::io_failure, w) {}
};
struct fit_error : error {
    explicit fit_error(const std::string& w) : error(exit_code::fit_failure, w) {}
};

}  // namespace ringdps
