#pragma once

#include "ringdps/detector.hpp"

namespace ringdps {

// End-to-end link budget. total_loss_db is the transmitter-to-SPAD optical
// loss inclusive of the demodulator; eta is applied separately afterwards.
struct LinkParams {
    double mu = 0.1;
    double symbol_rate_hz = 1e9;
    double total_loss_db = 23.5;
    double demod_insertion_db = 16.7;
    double extinction_db = 18.0;

    void validate() const;
};

// Error-source decomposition: the three e_* components are fractions of all
// registered clicks and reassemble to qber exactly.
struct QberBreakdown {
    double qber = 0.0;
    double e_leak = 0.0;
    double e_dark = 0.0;
    double e_afterpulse = 0.0;
    double raw_rate_cps = 0.0;      // registered click rate, dead-time compressed
    double signal_rate_cps = 0.0;   // signal clicks before detector pileup
};

struct KeyRateReport {
    double sifted_rate_bps = 0.0;
    double secure_fraction = 0.0;   // bits per sifted bit, may be negative
    double secure_rate_bps = 0.0;   // clamped at 0
    double secure_bits_per_symbol = 0.0;
    double qber_used = 0.0;
};

// Mean-field afterpulse probability per registered click at rate R:
// p_eff(R) = afterpulse_prob * exp(-dead_time/detrap) * (1 + N(R*detrap))
// with N(x) = 1/(expm1(1/x)). N sums the residual trap occupancy of the
// preceding clicks at mean spacing 1/R, the closed-form counterpart of the
// Monte-Carlo kernel's stacked trap level.
double afterpulse_p_eff(double registered_rate_cps, const SpadModel& spad);

// Analytic QBER: signal rate mu*Rsym*eta*10^(-L/10); leakage errors from the
// finite demodulation extinction, signal/(1+10^(eps/10)); dark and
// afterpulse clicks count as errors with probability 1/2. The afterpulse
// rate is fixed-point solved with p_eff evaluated at the dead-time
// compressed registered rate.
QberBreakdown qber_analytic(const LinkParams& link, const SpadModel& spad);

// Binary entropy in bits; h2(0) = h2(1) = 0.
double binary_entropy(double x);

// Secure fraction per sifted bit under the individual-attack collision
// bound: p_c = 1 - e^2 - (1-6e)^2 / 2, fraction = -log2(p_c) - f_ec*h2(e).
// May be negative; callers clamp for rates.
double secure_fraction(double qber, double f_ec = 1.16);

// Secure-rate report. Sifted rate = registered click rate (every click
// makes a sifted bit in DPS), i.e. signal + dark + afterpulse clicks after
// dead-time compression.
KeyRateReport secure_rate(const LinkParams& link, const SpadModel& spad,
                          double qber, double f_ec = 1.16);

struct LossOptimum {
    double loss_db = 0.0;
    double qber = 0.0;
    bool flat_objective = false;    // variation below 1e-6 across the range
};

// Dense-grid scan (0.05 dB step) of qber_analytic over total loss, followed
// by one parabolic refinement; returns the minimizer.
LossOptimum optimal_loss(const LinkParams& link_template, const SpadModel& spad,
                         double loss_min_db, double loss_max_db);

struct BudgetReport {
    double budget_db = 0.0;
    bool infeasible = false;        // negative budget
};

// Channel budget left after the demodulator:
// budget = total - demod_insertion + receiver_coupling_saving.
BudgetReport link_budget(double total_loss_db, double demod_insertion_db,
                         double receiver_coupling_saving_db = 0.0);

}  // namespace ringdps
