#include "ringdps/ring.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ringdps/errors.hpp"

namespace ringdps {

namespace {

constexpr double kPi = std::numbers::pi;

double db_to_power(double db) { return std::pow(10.0, db / 10.0); }
double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

// Power transmission of the bare all-pass notch at round-trip phase phi.
double notch_power(double t, double a, double phi) {
    const double c = std::cos(phi);
    const double num = t * t + a * a - 2.0 * t * a * c;
    const double den = 1.0 + t * t * a * a - 2.0 * t * a * c;
    return num / den;
}

// Given the coupling product x = t*a, the difference d = t-a that realizes
// the requested base-to-minimum extinction ratio X. T_min = d^2/(1-x)^2 and
// T_base = (t+a)^2/(1+x)^2 couple through d, so iterate the closed form.
double difference_for_extinction(double x, double X) {
    double d = (1.0 - x) / std::sqrt(X);
    for (int i = 0; i < 60; ++i) {
        const double s = std::sqrt(d * d + 4.0 * x);   // t + a
        const double t_base = (s / (1.0 + x)) * (s / (1.0 + x));
        const double d_new = std::sqrt(t_base / X) * (1.0 - x);
        const bool done = std::abs(d_new - d) < 1e-16;
        d = d_new;
        if (done) break;
    }
    return d;
}

struct Couplings {
    double t = 0.0;
    double a = 0.0;
};

Couplings couplings_from_product(double x, double X) {
    const double d = difference_for_extinction(x, X);
    const double t = 0.5 * (std::sqrt(d * d + 4.0 * x) + d);
    return {t, t - d};
}

}  // namespace

void RingModel::validate() const {
    if (!(fsr_hz > 0.0))
        throw invariant_error("ring.fsr_hz must be positive");
    if (!(t_self > 0.0 && t_self < 1.0))
        throw invariant_error("ring.t_self must lie in (0, 1)");
    if (!(a_rt > 0.0 && a_rt <= 1.0))
        throw invariant_error("ring.a_rt must lie in (0, 1]");
    if (!(excess_loss_db >= 0.0))
        throw invariant_error("ring.excess_loss_db must be >= 0");
    if (!std::isfinite(resonance_offset_hz))
        throw invariant_error("ring.resonance_offset_hz must be finite");
}

void MziModel::validate() const {
    if (!(delay_s > 0.0))
        throw invariant_error("mzi.delay_s must be positive");
    if (!(excess_loss_db >= 0.0))
        throw invariant_error("mzi.excess_loss_db must be >= 0");
    if (!std::isfinite(phase_trim_rad))
        throw invariant_error("mzi.phase_trim_rad must be finite");
}

void SpectrumTable::validate() const {
    if (detuning_hz.size() != transmission_db.size())
        throw invariant_error("spectrum: column length mismatch");
    if (detuning_hz.size() < 8)
        throw invariant_error("spectrum: needs at least 8 rows");
    for (std::size_t i = 1; i < detuning_hz.size(); ++i) {
        if (!(detuning_hz[i] > detuning_hz[i - 1]))
            throw invariant_error("spectrum: abscissa must be strictly monotone");
    }
}

std::complex<double> ring_response(const RingModel& model, double detuning_hz) {
    // Reduce into [0, FSR) first so periodicity is exact for exact inputs:
    // every detuning that differs by a whole number of FSRs evaluates the
    // same reduced value bit for bit. The negative phase slope makes the
    // impulse response causal under the e^{+i 2 pi f t} synthesis convention.
    double reduced = std::fmod(detuning_hz - model.resonance_offset_hz, model.fsr_hz);
    if (reduced < 0.0) reduced += model.fsr_hz;
    const double phi = -2.0 * kPi * reduced / model.fsr_hz;
    const std::complex<double> e = std::polar(1.0, phi);
    const std::complex<double> h =
        (model.t_self - model.a_rt * e) / (1.0 - model.t_self * model.a_rt * e);
    return db_to_amplitude(-model.excess_loss_db) * h;
}

double ring_transmission_db(const RingModel& model, double detuning_hz) {
    const double p = std::norm(ring_response(model, detuning_hz));
    return 10.0 * std::log10(std::max(p, 1e-300));
}

RingModel fit_ring_params(double fsr_hz, double fwhm_hz, double extinction_db) {
    if (!(fsr_hz > 0.0))
        throw invariant_error("fit_ring_params: fsr_hz must be positive");
    if (!(fwhm_hz > 0.0 && fwhm_hz < fsr_hz))
        throw invariant_error("fit_ring_params: fwhm_hz must lie in (0, fsr_hz)");
    if (!(extinction_db > 0.0))
        throw invariant_error("fit_ring_params: extinction_db must be positive");

    const double X = db_to_power(extinction_db);
    const double phi_h = kPi * fwhm_hz / fsr_hz;   // half width in round-trip phase

    // Residual of the half-depth condition at phi_h as a function of the
    // coupling product x = t*a. Monotone enough for plain bisection.
    auto half_residual = [&](double x) {
        const auto [t, a] = couplings_from_product(x, X);
        const double t_min = notch_power(t, a, 0.0);
        const double t_base = notch_power(t, a, kPi);
        return notch_power(t, a, phi_h) - 0.5 * (t_min + t_base);
    };

    double lo = 1e-6, hi = 1.0 - 1e-12;
    double f_lo = half_residual(lo);
    if (f_lo * half_residual(hi) > 0.0)
        throw fit_error("fit_ring_params: no physical all-pass ring for this "
                        "FWHM/extinction pair");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = half_residual(mid);
        if (f_lo * f_mid <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }

    const auto [t, a] = couplings_from_product(0.5 * (lo + hi), X);
    RingModel model;
    model.fsr_hz = fsr_hz;
    model.t_self = t;
    model.a_rt = std::min(a, 1.0);
    model.validate();

    // The through-port notch can never be wider than half a period. Past
    // that ceiling the bisection latches onto a numerical artifact near
    // t*a = 1, so confirm the solution actually reproduces the request.
    const RingFigures achieved = ring_figures(model);
    if (std::abs(achieved.fwhm_hz - fwhm_hz) > 1e-6 * fwhm_hz ||
        std::abs(achieved.extinction_db - extinction_db) > 1e-6 * extinction_db)
        throw fit_error("fit_ring_params: no physical all-pass ring for this "
                        "FWHM/extinction pair");
    return model;
}

RingFigures ring_figures(const RingModel& model) {
    const double t = model.t_self, a = model.a_rt;
    const double t_min = notch_power(t, a, 0.0);
    const double t_base = notch_power(t, a, kPi);
    const double half = 0.5 * (t_min + t_base);

    // notch_power is strictly increasing in phi on [0, pi], so the half
    // crossing is a clean bisection.
    double lo = 0.0, hi = kPi;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (notch_power(t, a, mid) < half ? lo : hi) = mid;
    }
    const double phi_h = 0.5 * (lo + hi);

    RingFigures fig;
    fig.fwhm_hz = phi_h * model.fsr_hz / kPi;
    fig.extinction_db = 10.0 * std::log10(t_base / std::max(t_min, 1e-300));
    fig.finesse = model.fsr_hz / fig.fwhm_hz;
    return fig;
}

std::complex<double> mzi_response(const MziModel& model, double detuning_hz) {
    const std::complex<double> e =
        std::polar(1.0, -2.0 * kPi * detuning_hz * model.delay_s + model.phase_trim_rad);
    const std::complex<double> h = (model.port == MziPort::destructive)
                                       ? 0.5 * (1.0 - e)
                                       : 0.5 * (1.0 + e);
    return db_to_amplitude(-model.excess_loss_db) * h;
}

double ring_photon_lifetime_s(const RingModel& model) {
    // Field decays by t*a per round trip of duration 1/FSR.
    const double ta = model.t_self * model.a_rt;
    return -1.0 / (model.fsr_hz * std::log(ta));
}

namespace {

// Model curve in dB: baseline plus notch shape relative to its own
// off-resonance level, so the fitted baseline is the off-resonance plateau.
double model_db(double f, double f0, const RingModel& ring, double t_base,
                double baseline_db) {
    const double reduced = std::fmod(f - f0, ring.fsr_hz);
    const double phi = 2.0 * kPi * reduced / ring.fsr_hz;
    const double p = notch_power(ring.t_self, ring.a_rt, phi);
    return baseline_db + 10.0 * std::log10(std::max(p / t_base, 1e-300));
}

struct FitState {
    double f0 = 0.0;
    double fwhm = 0.0;
    double ext_db = 0.0;
    double baseline_db = 0.0;
};

double rms_of(const SpectrumTable& tab, const FitState& s, double fsr) {
    RingModel ring;
    try {
        ring = fit_ring_params(fsr, s.fwhm, s.ext_db);
    } catch (const error&) {
        return 1e12;
    }
    const double t_base = notch_power(ring.t_self, ring.a_rt, kPi);
    double sum = 0.0;
    for (std::size_t i = 0; i < tab.detuning_hz.size(); ++i) {
        const double r =
            model_db(tab.detuning_hz[i], s.f0, ring, t_base, s.baseline_db) -
            tab.transmission_db[i];
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(tab.detuning_hz.size()));
}

}  // namespace

RingFit fit_to_measurement(const SpectrumTable& table, double max_rms_residual_db) {
    table.validate();
    const auto& f = table.detuning_hz;
    const auto& y = table.transmission_db;
    const std::size_t n = f.size();

    // Baseline from the median level; the notch occupies few samples.
    std::vector<double> sorted(y);
    std::sort(sorted.begin(), sorted.end());
    double baseline = sorted[n / 2];

    const std::size_t i_min =
        static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
    const double depth = baseline - y[i_min];
    if (depth < 3.0)
        throw fit_error("fit_to_measurement: no notch deeper than 3 dB found");

    // Notch segments below the half-depth level give the initial width and,
    // when more than one notch is visible, the free spectral range.
    const double half_level = baseline - 0.5 * depth;
    std::vector<std::pair<double, double>> segments;   // (center, width)
    std::size_t seg_start = 0;
    bool in_seg = false;
    for (std::size_t i = 0; i < n; ++i) {
        const bool below = y[i] < half_level;
        if (below && !in_seg) {
            seg_start = i;
            in_seg = true;
        } else if (!below && in_seg) {
            const double left = f[seg_start > 0 ? seg_start - 1 : 0];
            const double right = f[i];
            segments.emplace_back(0.5 * (left + right), right - left);
            in_seg = false;
        }
    }
    if (in_seg) {
        segments.emplace_back(0.5 * (f[seg_start] + f[n - 1]), f[n - 1] - f[seg_start]);
    }
    if (segments.empty())
        throw fit_error("fit_to_measurement: no notch segment below half depth");

    double fsr = 120.1e9;   // assumed when only one notch is visible
    if (segments.size() >= 2) {
        double spacing = 0.0;
        for (std::size_t i = 1; i < segments.size(); ++i)
            spacing += segments[i].first - segments[i - 1].first;
        fsr = spacing / static_cast<double>(segments.size() - 1);
    }

    // Segment nearest the global minimum seeds the local refinement.
    FitState s;
    s.f0 = f[i_min];
    s.ext_db = depth;
    s.baseline_db = baseline;
    s.fwhm = segments[0].second;
    double nearest = std::abs(segments[0].first - s.f0);
    for (const auto& [center, width] : segments) {
        if (std::abs(center - s.f0) <= nearest) {
            nearest = std::abs(center - s.f0);
            s.fwhm = width;
        }
    }
    s.fwhm = std::clamp(s.fwhm, fsr * 1e-5, fsr * 0.5);

    // Coordinate descent with shrinking steps; the objective is smooth in
    // all four coordinates and the seed is close, so this converges fast
    // without an external optimizer.
    double step_f0 = s.fwhm;
    double step_w = 0.5;      // multiplicative on fwhm
    double step_e = 2.0;      // dB
    double step_b = 0.5;      // dB
    double best = rms_of(table, s, fsr);
    for (int iter = 0; iter < 80; ++iter) {
        bool improved = false;
        auto try_state = [&](const FitState& cand) {
            const double r = rms_of(table, cand, fsr);
            if (r < best) {
                best = r;
                s = cand;
                improved = true;
            }
        };
        for (const double sgn : {+1.0, -1.0}) {
            FitState c = s;
            c.f0 = s.f0 + sgn * step_f0;
            try_state(c);
            c = s;
            c.fwhm = s.fwhm * (1.0 + sgn * step_w);
            if (c.fwhm > 0 && c.fwhm < 0.9 * fsr) try_state(c);
            c = s;
            c.ext_db = s.ext_db + sgn * step_e;
            if (c.ext_db > 1.0) try_state(c);
            c = s;
            c.baseline_db = s.baseline_db + sgn * step_b;
            try_state(c);
        }
        if (!improved) {
            step_f0 *= 0.5;
            step_w *= 0.5;
            step_e *= 0.5;
            step_b *= 0.5;
            if (step_f0 < 1e3 && step_w < 1e-6 && step_e < 1e-6 && step_b < 1e-6)
                break;
        }
    }

    if (best > max_rms_residual_db)
        throw fit_error("fit_to_measurement: residual " + std::to_string(best) +
                        " dB RMS exceeds threshold");

    RingFit out;
    out.model = fit_ring_params(fsr, s.fwhm, s.ext_db);
    out.model.resonance_offset_hz = s.f0;
    out.baseline_db = s.baseline_db;
    out.rms_residual_db = best;
    return out;
}

}  // namespace ringdps
