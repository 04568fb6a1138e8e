#pragma once

#include <complex>
#include <string>
#include <vector>

namespace ringdps {

// All-pass micro-ring through-port, parametrized by the amplitude
// self-coupling t_self and the round-trip amplitude transmission a_rt.
// The under/over-coupled degeneracy (identical magnitude, different phase)
// is resolved by the convention a_rt <= t_self.
struct RingModel {
    double fsr_hz = 120.1e9;
    double t_self = 0.0;
    double a_rt = 0.0;
    double resonance_offset_hz = 0.0;
    double excess_loss_db = 0.0;

    void validate() const;
};

enum class MziPort { constructive, destructive };

// Delay-line interferometer reference demodulator.
struct MziModel {
    double delay_s = 1e-9;
    MziPort port = MziPort::destructive;
    double phase_trim_rad = 0.0;
    double excess_loss_db = 0.0;

    void validate() const;
};

// Measured (or synthetic) through-port spectrum: strictly monotone abscissa,
// transmission in dB. Abscissa is detuning in Hz; wavelength input is
// converted at parse time against a 1550 nm reference.
struct SpectrumTable {
    std::vector<double> detuning_hz;
    std::vector<double> transmission_db;

    void validate() const;
};

struct RingFit {
    RingModel model;
    double baseline_db = 0.0;
    double rms_residual_db = 0.0;
};

// Complex through-port response at a detuning from the carrier reference.
//
// H(phi) = (t - a e^{i phi}) / (1 - t a e^{i phi}) with round-trip phase
// phi = -2*pi*detuning/FSR, scaled by the excess-loss amplitude. The sign
// of phi follows the e^{+i 2 pi f t} synthesis convention used by the field
// simulator so that the impulse response is causal; magnitudes are
// unaffected. Detuning is reduced modulo FSR first, making periodicity
// exact by construction.
std::complex<double> ring_response(const RingModel& model, double detuning_hz);

// Power transmission in dB relative to unity input (includes excess loss).
double ring_transmission_db(const RingModel& model, double detuning_hz);

// Solve (t_self, a_rt) from spectral figures of merit. FWHM is taken at the
// half depth of the power notch in linear units. Throws fit_error when the
// pair is infeasible for a physical all-pass ring.
RingModel fit_ring_params(double fsr_hz, double fwhm_hz, double extinction_db);

// Figures of merit recovered from a model, for round-trip checks.
struct RingFigures {
    double fwhm_hz = 0.0;
    double extinction_db = 0.0;
    double finesse = 0.0;
};
RingFigures ring_figures(const RingModel& model);

// Complex response of the delay interferometer at a detuning.
// Destructive port: (1 - e^{i(-2*pi*f*delay + trim)})/2, constructive port
// is the complement; same causal sign convention as ring_response.
std::complex<double> mzi_response(const MziModel& model, double detuning_hz);

// Least-squares fit of |ring_response|^2 plus a flat baseline to a measured
// spectrum. Coordinate-descent refinement over (f0, fwhm, extinction,
// baseline) seeded from direct heuristics. Throws fit_error when no notch is
// visible or the residual exceeds max_rms_residual_db.
RingFit fit_to_measurement(const SpectrumTable& table,
                           double max_rms_residual_db = 3.0);

// Photon lifetime (field 1/e time) of the notch, used for transient guards.
double ring_photon_lifetime_s(const RingModel& model);

}  // namespace ringdps
