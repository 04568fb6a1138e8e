#pragma once

#include <cstdint>
#include <vector>

#include "ringdps/field.hpp"
#include "ringdps/rng.hpp"

namespace ringdps {

// Free-running single-photon avalanche detector.
struct SpadModel {
    double eta = 0.1;                 // detection efficiency
    double dark_cps = 550.0;          // dark count rate
    double afterpulse_prob = 8e-4;    // one-afterpulse probability per detection at zero delay
    double detrap_time_s = 100e-6;    // exponential afterpulse decay constant
    double dead_time_s = 1e-6;        // non-paralyzable hold-off

    void validate() const;
};

enum class ClickCause : std::uint8_t { signal = 0, dark = 1, afterpulse = 2 };

// Diagnostic view of a simulated slot stream. Cause tags are best-effort
// labels for debugging output only; QBER decisions never read them.
struct ClickTrain {
    std::vector<std::uint8_t> clicks;     // one flag per slot
    std::vector<ClickCause> causes;       // parallel to clicks, valid where clicks[k] = 1
    double slot_duration_s = 0.0;
    std::uint64_t seed = 0;
};

// Analytic per-slot click probability for Poissonian light plus dark counts
// over the accept window: p = 1 - exp(-(eta*mean_photons + dark_cps*slot_s)).
double click_probability(double mean_photons, const SpadModel& spad, double slot_s);

// Streaming detector pass with persistent state, so a long run can be fed
// frame by frame while dead time, trap occupancy and pending afterpulses
// carry across frame boundaries.
//
// Randomness contract: the primary stream draws exactly one uniform per slot
// whether or not the detector is dead, so downstream slots stay aligned
// between runs that differ only in a few clicks. Afterpulse decisions use a
// tiny per-click engine seeded by (seed, global slot index); matched-seed
// runs therefore keep afterpulse noise common to both sides of a comparison.
//
// Afterpulse kernel: every registered click deposits one unit of trap
// occupancy q (decaying exp(-dt/detrap_time)); with probability
// afterpulse_prob * q (clamped) the click schedules one candidate afterpulse
// at an Exp(detrap_time) delay. Candidates landing inside a dead window are
// absorbed, which reproduces the exp(-dead_time/detrap_time) survival factor
// of the mean-field model; stacked occupancy (q > 1 at high registered
// rates) is the saturation mechanism behind the loss-budget optimum.
class ClickSimulator {
public:
    ClickSimulator(const SpadModel& spad, std::uint64_t seed);

    // Counts clicks from `slots`; mark/space labels come from diff_bits and
    // only local indices in [counted_begin, counted_end) enter the
    // statistics (guard slots still click and still load the detector).
    // Per-slot flags are returned through `train` when non-null.
    struct FrameCounts {
        std::uint64_t clicks_total = 0;     // clicks in counted slots
        std::uint64_t clicks_space = 0;     // clicks in counted space slots
        std::uint64_t clicks_all = 0;       // clicks including guard slots
    };

    FrameCounts process_frame(const SlotEnergies& slots,
                              const std::vector<std::uint8_t>& diff_bits,
                              std::size_t counted_begin, std::size_t counted_end,
                              ClickTrain* train = nullptr);

    std::uint64_t slots_processed() const { return global_slot_; }

private:
    SpadModel spad_;
    std::uint64_t seed_;
    rng primary_;
    std::uint64_t global_slot_ = 0;
    std::int64_t dead_until_ = -1;          // last dead global slot
    double trap_level_ = 0.0;
    std::int64_t last_click_slot_ = 0;
    bool any_click_ = false;
    std::uint64_t n_dead_slots_ = 0;
    double tau_slots_ = 0.0;
    std::vector<std::uint64_t> pending_;    // scheduled afterpulse arrival slots (sorted)
};

// One-shot convenience wrapper: fresh state, whole train returned.
ClickTrain simulate_clicks(const SlotEnergies& slots, const SpadModel& spad,
                           std::uint64_t seed);

}  // namespace ringdps
