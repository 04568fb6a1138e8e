#include "ringdps/field.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <unordered_map>

#include "ringdps/errors.hpp"
#include "ringdps/rng.hpp"

namespace ringdps {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW plans are cached per transform size. FFTW_ESTIMATE keeps plan choice
// (and therefore floating-point summation order) deterministic across runs,
// which the byte-identical-results contract depends on.
class FftEngine {
public:
    static FftEngine& instance() {
        static FftEngine engine;
        return engine;
    }

    void forward(std::vector<std::complex<double>>& data) { execute(data, FFTW_FORWARD); }
    void backward(std::vector<std::complex<double>>& data) { execute(data, FFTW_BACKWARD); }

private:
    struct PlanPair {
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
    };

    void execute(std::vector<std::complex<double>>& data, int direction) {
        std::lock_guard<std::mutex> lock(mutex_);
        const std::size_t n = data.size();
        auto it = plans_.find(n);
        if (it == plans_.end()) {
            PlanPair p;
            // In-place planning on a scratch buffer; FFTW_ESTIMATE does not
            // touch the array contents.
            std::vector<std::complex<double>> scratch(n);
            auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
            p.fwd = fftw_plan_dft_1d(static_cast<int>(n), ptr, ptr, FFTW_FORWARD,
                                     FFTW_ESTIMATE);
            p.bwd = fftw_plan_dft_1d(static_cast<int>(n), ptr, ptr, FFTW_BACKWARD,
                                     FFTW_ESTIMATE);
            it = plans_.emplace(n, p).first;
        }
        auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(direction == FFTW_FORWARD ? it->second.fwd : it->second.bwd,
                         ptr, ptr);
    }

    std::mutex mutex_;
    std::unordered_map<std::size_t, PlanPair> plans_;
};

}  // namespace

void SymbolFrame::validate() const {
    if (diff_bits.empty())
        throw invariant_error("frame: empty symbol sequence");
    if (phases.size() != diff_bits.size())
        throw invariant_error("frame: phases/diff_bits length mismatch");
    double expect = phases.front();
    for (std::size_t k = 0; k < diff_bits.size(); ++k) {
        if (diff_bits[k] > 1)
            throw invariant_error("frame: diff_bits must be 0 or 1");
        if (k > 0) expect += kPi * diff_bits[k];
        const double delta = std::remainder(phases[k] - expect, 2.0 * kPi);
        if (std::abs(delta) > 1e-9)
            throw invariant_error("frame: phases do not accumulate diff_bits");
    }
}

SymbolFrame make_frame(const std::vector<std::uint8_t>& diff_bits) {
    SymbolFrame frame;
    frame.diff_bits = diff_bits;
    frame.phases.resize(diff_bits.size());
    double phase = 0.0;
    for (std::size_t k = 0; k < diff_bits.size(); ++k) {
        if (k > 0) phase += kPi * diff_bits[k];
        frame.phases[k] = phase;
    }
    frame.validate();
    return frame;
}

SymbolFrame random_frame(std::size_t length, std::uint64_t seed) {
    if (length == 0)
        throw invariant_error("random_frame: length must be positive");
    rng gen(seed);
    std::vector<std::uint8_t> bits(length);
    for (auto& b : bits) b = static_cast<std::uint8_t>(gen.bit());
    bits[0] = 0;
    return make_frame(bits);
}

std::size_t SampledField::symbol_count() const {
    const double per = sample_rate_hz / symbol_rate_hz;
    return static_cast<std::size_t>(std::llround(samples.size() / per));
}

double SampledField::total_energy() const {
    double sum = 0.0;
    for (const auto& s : samples) sum += std::norm(s);
    return sum;
}

void SampledField::validate() const {
    if (samples.empty())
        throw invariant_error("field: no samples");
    if (!(symbol_rate_hz > 0.0) || !(sample_rate_hz > 0.0))
        throw invariant_error("field: rates must be positive");
    if (sample_rate_hz < 16.0 * symbol_rate_hz)
        throw invariant_error("field: oversampling below the 16x minimum");
    if (!(mu >= 0.0))
        throw invariant_error("field: mu must be >= 0");
}

SampledField synthesize_field(const SymbolFrame& frame, PulseShape shape,
                              double mu, double symbol_rate_hz,
                              unsigned oversampling,
                              double carrier_detuning_hz) {
    frame.validate();
    if (oversampling < 16)
        throw invariant_error("synthesize_field: oversampling must be >= 16");
    if (!(mu >= 0.0))
        throw invariant_error("synthesize_field: mu must be >= 0");
    if (!(symbol_rate_hz > 0.0))
        throw invariant_error("synthesize_field: symbol_rate_hz must be positive");

    const std::size_t n_sym = frame.diff_bits.size();
    const std::size_t os = oversampling;

    SampledField field;
    field.samples.resize(n_sym * os);
    field.sample_rate_hz = symbol_rate_hz * static_cast<double>(os);
    field.symbol_rate_hz = symbol_rate_hz;
    field.carrier_detuning_hz = carrier_detuning_hz;
    field.mu = mu;

    // Phase-only modulation of a CW carrier: full-duty rectangular envelope.
    // raised_cosine keeps the per-symbol energy but rounds the envelope
    // shoulders (robustness studies only).
    const double amp_flat = std::sqrt(mu / static_cast<double>(os));
    for (std::size_t k = 0; k < n_sym; ++k) {
        const std::complex<double> rot = std::polar(1.0, frame.phases[k]);
        for (std::size_t j = 0; j < os; ++j) {
            double amp = amp_flat;
            if (shape == PulseShape::raised_cosine) {
                const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(os);
                const double w = 0.5 * (1.0 - std::cos(2.0 * kPi * u));
                // normalize so the symbol still carries mu: mean of w^2 = 3/8
                amp = std::sqrt(mu * w * w / (0.375 * static_cast<double>(os)));
            }
            field.samples[k * os + j] = amp * rot;
        }
    }
    return field;
}

ResponseFn ring_response_fn(const RingModel& model) {
    model.validate();
    return [model](double f) { return ring_response(model, f); };
}

ResponseFn mzi_response_fn(const MziModel& model) {
    model.validate();
    return [model](double f) { return mzi_response(model, f); };
}

SampledResponse sample_response(const ResponseFn& response, std::size_t n_samples,
                                double sample_rate_hz, double carrier_detuning_hz) {
    if (n_samples == 0)
        throw invariant_error("sample_response: n_samples must be positive");
    if (!(sample_rate_hz > 0.0))
        throw invariant_error("sample_response: sample_rate_hz must be positive");

    SampledResponse out;
    out.sample_rate_hz = sample_rate_hz;
    out.carrier_detuning_hz = carrier_detuning_hz;
    out.bins.resize(n_samples);
    const double df = sample_rate_hz / static_cast<double>(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        // Standard DFT bin layout: bins above n/2 are negative frequencies.
        const double k = (i <= n_samples / 2)
                             ? static_cast<double>(i)
                             : static_cast<double>(i) - static_cast<double>(n_samples);
        out.bins[i] = response(k * df + carrier_detuning_hz);
    }
    return out;
}

SampledField apply_filter(const SampledField& field, const ResponseFn& response) {
    field.validate();
    return apply_filter(field, sample_response(response, field.samples.size(),
                                               field.sample_rate_hz,
                                               field.carrier_detuning_hz));
}

SampledField apply_filter(const SampledField& field, const SampledResponse& response) {
    field.validate();
    if (response.bins.size() != field.samples.size() ||
        response.sample_rate_hz != field.sample_rate_hz ||
        response.carrier_detuning_hz != field.carrier_detuning_hz)
        throw invariant_error("apply_filter: response grid does not match the field");

    SampledField out = field;
    auto& engine = FftEngine::instance();
    engine.forward(out.samples);
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] *= response.bins[i];
    engine.backward(out.samples);
    const double scale = 1.0 / static_cast<double>(out.samples.size());
    for (auto& s : out.samples) s *= scale;
    return out;
}

SlotEnergies integrate_slots(const SampledField& field, double window_fraction,
                             WindowAlignment alignment) {
    field.validate();
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
        throw invariant_error("integrate_slots: window_fraction must be in (0, 1]");

    const double per = field.sample_rate_hz / field.symbol_rate_hz;
    const auto os = static_cast<std::size_t>(std::llround(per));
    if (std::abs(per - static_cast<double>(os)) > 1e-9 ||
        field.samples.size() % os != 0)
        throw invariant_error("integrate_slots: field is not a whole number of symbols");

    const std::size_t n_sym = field.samples.size() / os;
    auto w = static_cast<std::size_t>(std::llround(window_fraction * static_cast<double>(os)));
    w = std::max<std::size_t>(1, std::min(w, os));
    const std::size_t start = (alignment == WindowAlignment::centered) ? (os - w) / 2 : 0;

    SlotEnergies slots;
    slots.photons.resize(n_sym);
    slots.slot_duration_s = static_cast<double>(w) / field.sample_rate_hz;
    slots.slot_period_s = 1.0 / field.symbol_rate_hz;
    for (std::size_t k = 0; k < n_sym; ++k) {
        double sum = 0.0;
        const std::size_t base = k * os + start;
        for (std::size_t j = 0; j < w; ++j) sum += std::norm(field.samples[base + j]);
        slots.photons[k] = sum;
    }
    return slots;
}

ExtinctionEstimate demod_extinction(const ResponseFn& response,
                                    double symbol_rate_hz,
                                    double carrier_detuning_hz, double mu,
                                    std::size_t frame_length,
                                    unsigned oversampling,
                                    double window_fraction,
                                    WindowAlignment alignment,
                                    std::uint64_t seed) {
    if (frame_length < 1024)
        throw invariant_error("demod_extinction: frame_length must be >= 1024");

    const SymbolFrame frame = random_frame(frame_length, mix_seed(seed, stream_tag::extinction));
    SampledField field = synthesize_field(frame, PulseShape::rectangular, mu,
                                          symbol_rate_hz, oversampling,
                                          carrier_detuning_hz);
    field = apply_filter(field, response);
    const SlotEnergies slots = integrate_slots(field, window_fraction, alignment);

    double mark_sum = 0.0, space_sum = 0.0;
    std::size_t mark_n = 0, space_n = 0;
    const std::size_t end = frame_length - kTrailingGuardSymbols;
    for (std::size_t k = kLeadingGuardSymbols; k < end; ++k) {
        if (frame.diff_bits[k]) {
            mark_sum += slots.photons[k];
            ++mark_n;
        } else {
            space_sum += slots.photons[k];
            ++space_n;
        }
    }

    ExtinctionEstimate est;
    est.mark_mean_photons = mark_n ? mark_sum / static_cast<double>(mark_n) : 0.0;
    est.space_mean_photons = space_n ? space_sum / static_cast<double>(space_n) : 0.0;
    if (est.space_mean_photons <= est.mark_mean_photons * 1e-12 ||
        est.space_mean_photons <= 0.0) {
        est.extinction_db = kExtinctionCeilingDb;
        est.ceiling_hit = true;
    } else {
        est.extinction_db =
            10.0 * std::log10(est.mark_mean_photons / est.space_mean_photons);
        if (est.extinction_db > kExtinctionCeilingDb) {
            est.extinction_db = kExtinctionCeilingDb;
            est.ceiling_hit = true;
        }
    }
    return est;
}

}  // namespace ringdps
