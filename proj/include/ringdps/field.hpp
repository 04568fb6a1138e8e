#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "ringdps/ring.hpp"

namespace ringdps {

// Differential-phase-shift symbol frame: diff_bits[k] = 1 flips the phase by
// pi between symbols k-1 and k; phases carry the accumulated value.
struct SymbolFrame {
    std::vector<std::uint8_t> diff_bits;
    std::vector<double> phases;

    void validate() const;
};

// Build a frame from differential bits (phases accumulated from 0).
SymbolFrame make_frame(const std::vector<std::uint8_t>& diff_bits);

// Deterministic random frame for extinction probes and Monte-Carlo runs.
// The first differential bit is forced to 0 so frame 0 always starts on the
// reference phase.
SymbolFrame random_frame(std::size_t length, std::uint64_t seed);

enum class PulseShape { rectangular, raised_cosine };

// Complex baseband envelope of the pulse train. Samples are normalized so
// the mean energy per symbol is mu (photons). carrier_detuning_hz is carried
// as metadata in the rotating carrier frame rather than as a sample-domain
// ramp; filters evaluate their response at (bin frequency + carrier
// detuning), which stays exact for detunings far beyond Nyquist (whole-FSR
// channel steps).
struct SampledField {
    std::vector<std::complex<double>> samples;
    double sample_rate_hz = 0.0;
    double carrier_detuning_hz = 0.0;
    double symbol_rate_hz = 0.0;
    double mu = 0.0;

    std::size_t symbol_count() const;
    double total_energy() const;
    void validate() const;
};

// Per-slot detected energies in photons. slot_duration_s is the accept
// window duration (window_fraction x symbol period), which also scales the
// dark-count exposure downstream; slot_period_s is the slot spacing used
// for dead-time and detrapping conversions.
struct SlotEnergies {
    std::vector<double> photons;
    double slot_duration_s = 0.0;
    double slot_period_s = 0.0;
};

SampledField synthesize_field(const SymbolFrame& frame, PulseShape shape,
                              double mu, double symbol_rate_hz,
                              unsigned oversampling,
                              double carrier_detuning_hz);

// Frequency response sampled at absolute detuning (Hz) from the filter
// reference.
using ResponseFn = std::function<std::complex<double>(double)>;

ResponseFn ring_response_fn(const RingModel& model);
ResponseFn mzi_response_fn(const MziModel& model);

// FFT filter: output spectrum = input spectrum x response(bin frequency +
// carrier detuning). Energy never increases for passive responses.
SampledField apply_filter(const SampledField& field, const ResponseFn& response);

// The same filter with the response pre-sampled on the DFT bin grid. Long
// runs push hundreds of equally sized chunks through one filter; sampling
// the response once removes the per-chunk transfer-function evaluation
// without changing a single output bit.
struct SampledResponse {
    std::vector<std::complex<double>> bins;   // DFT bin order
    double sample_rate_hz = 0.0;
    double carrier_detuning_hz = 0.0;
};

SampledResponse sample_response(const ResponseFn& response, std::size_t n_samples,
                                double sample_rate_hz, double carrier_detuning_hz);
SampledField apply_filter(const SampledField& field, const SampledResponse& response);

// Accept-window placement within each symbol slot. The ring demodulator
// concentrates mark energy in a transient at the slot start, so time-gated
// receivers use a leading window; centered is the neutral default.
enum class WindowAlignment { centered, leading };

SlotEnergies integrate_slots(const SampledField& field, double window_fraction,
                             WindowAlignment alignment = WindowAlignment::centered);

// Frame-edge exclusion for mark/space statistics: the FFT filter is
// circular, so the demodulator memory wraps the last symbols into the first
// slot. First symbol plus a two-symbol trailing guard covers photon
// lifetimes up to 2 ns at 1 Gbaud.
inline constexpr std::size_t kLeadingGuardSymbols = 1;
inline constexpr std::size_t kTrailingGuardSymbols = 2;

struct ExtinctionEstimate {
    double extinction_db = 0.0;
    bool ceiling_hit = false;      // space energy was zero to machine precision
    double mark_mean_photons = 0.0;
    double space_mean_photons = 0.0;
};

inline constexpr double kExtinctionCeilingDb = 60.0;

// Demodulation extinction: mean mark-slot energy over mean space-slot energy
// on a seeded random frame, in dB. Deterministic for a given seed.
ExtinctionEstimate demod_extinction(const ResponseFn& response,
                                    double symbol_rate_hz,
                                    double carrier_detuning_hz, double mu,
                                    std::size_t frame_length,
                                    unsigned oversampling = 32,
                                    double window_fraction = 1.0,
                                    WindowAlignment alignment = WindowAlignment::centered,
                                    std::uint64_t seed = 0x5EEDF00DULL);

}  // namespace ringdps
