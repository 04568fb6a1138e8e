#include "ringdps/qkd.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ringdps/errors.hpp"

namespace ringdps {

void LinkParams::validate() const {
    if (!(mu > 0.0))
        throw invariant_error("link.mu must be positive");
    if (!(symbol_rate_hz > 0.0))
        throw invariant_error("link.symbol_rate_hz must be positive");
    if (!(total_loss_db >= 0.0))
        throw invariant_error("link.total_loss_db must be >= 0");
    if (!(demod_insertion_db >= 0.0))
        throw invariant_error("link.demod_insertion_db must be >= 0");
    if (!(extinction_db > 0.0))
        throw invariant_error("link.extinction_db must be positive");
}

double afterpulse_p_eff(double registered_rate_cps, const SpadModel& spad) {
    if (!(registered_rate_cps >= 0.0))
        throw invariant_error("afterpulse_p_eff: rate must be >= 0");
    const double base =
        spad.afterpulse_prob * std::exp(-spad.dead_time_s / spad.detrap_time_s);
    const double x = registered_rate_cps * spad.detrap_time_s;
    if (x <= 0.0) return base;
    // N(x) = 1/(exp(1/x) - 1): summed residual occupancy of earlier clicks
    // spaced 1/R apart, each decayed by exp(-k/(R*tau)).
    const double stacked = 1.0 / std::expm1(1.0 / x);
    return base * (1.0 + stacked);
}

QberBreakdown qber_analytic(const LinkParams& link, const SpadModel& spad) {
    link.validate();
    spad.validate();

    const double transmit = std::pow(10.0, -link.total_loss_db / 10.0);
    const double signal_rate =
        link.mu * link.symbol_rate_hz * spad.eta * transmit;
    const double leak = 1.0 / (1.0 + std::pow(10.0, link.extinction_db / 10.0));
    const double dark_rate = spad.dark_cps;

    // Fixed point over the afterpulse rate. The feedback sits on the
    // dead-time compressed rate: clicks that the hold-off swallows deposit
    // no traps.
    double ap_rate = 0.0;
    double total = signal_rate + dark_rate;
    double registered = total;
    for (int it = 0; it < 200; ++it) {
        total = signal_rate + dark_rate + ap_rate;
        registered = total / (1.0 + total * spad.dead_time_s);
        const double next = registered * afterpulse_p_eff(registered, spad);
        if (std::abs(next - ap_rate) <= 1e-12 * (1.0 + next)) {
            ap_rate = next;
            break;
        }
        ap_rate = next;
    }
    total = signal_rate + dark_rate + ap_rate;
    registered = total / (1.0 + total * spad.dead_time_s);

    QberBreakdown out;
    out.signal_rate_cps = signal_rate;
    out.raw_rate_cps = registered;
    if (total <= 0.0) return out;

    // Error fractions are ratios of uncompressed rates; the hold-off thins
    // every cause by the same factor, so the ratios survive compression.
    out.e_leak = signal_rate * leak / total;
    out.e_dark = 0.5 * dark_rate / total;
    out.e_afterpulse = 0.5 * ap_rate / total;
    out.qber = out.e_leak + out.e_dark + out.e_afterpulse;
    return out;
}

double binary_entropy(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double secure_fraction(double qber, double f_ec) {
    if (!(qber >= 0.0 && qber <= 0.5))
        throw invariant_error("secure_fraction: qber must lie in [0, 0.5]");
    if (!(f_ec >= 1.0))
        throw invariant_error("secure_fraction: f_ec must be >= 1");
    const double e = qber;
    const double collision = 1.0 - e * e - 0.5 * (1.0 - 6.0 * e) * (1.0 - 6.0 * e);
    if (!(collision > 0.0))
        throw invariant_error("secure_fraction: collision bound undefined here");
    return -std::log2(collision) - f_ec * binary_entropy(e);
}

KeyRateReport secure_rate(const LinkParams& link, const SpadModel& spad,
                          double qber, double f_ec) {
    const QberBreakdown bd = qber_analytic(link, spad);
    KeyRateReport rep;
    rep.sifted_rate_bps = bd.raw_rate_cps;   // every registered click is a sifted bit
    rep.qber_used = qber;
    rep.secure_fraction = secure_fraction(qber, f_ec);
    rep.secure_rate_bps = std::max(0.0, rep.sifted_rate_bps * rep.secure_fraction);
    rep.secure_bits_per_symbol = rep.secure_rate_bps / link.symbol_rate_hz;
    return rep;
}

LossOptimum optimal_loss(const LinkParams& link_template, const SpadModel& spad,
                         double loss_min_db, double loss_max_db) {
    if (!(loss_min_db >= 0.0) || !(loss_max_db > loss_min_db))
        throw invariant_error("optimal_loss: need 0 <= loss_min < loss_max");

    constexpr double kStep = 0.05;
    const auto n = static_cast<std::size_t>((loss_max_db - loss_min_db) / kStep) + 1;
    std::vector<double> grid(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
        grid[i] = std::min(loss_min_db + kStep * static_cast<double>(i), loss_max_db);
        LinkParams link = link_template;
        link.total_loss_db = grid[i];
        q[i] = qber_analytic(link, spad).qber;
    }

    std::size_t best = 0;
    double q_lo = q[0], q_hi = q[0];
    for (std::size_t i = 1; i < n; ++i) {
        if (q[i] < q[best]) best = i;
        q_lo = std::min(q_lo, q[i]);
        q_hi = std::max(q_hi, q[i]);
    }

    LossOptimum opt;
    opt.loss_db = grid[best];
    opt.qber = q[best];
    opt.flat_objective = (q_hi - q_lo) < 1e-6;

    // one parabolic refinement when the grid minimum is interior
    if (best > 0 && best + 1 < n) {
        const double a = q[best - 1], b = q[best], c = q[best + 1];
        const double denom = a - 2.0 * b + c;
        if (denom > 0.0) {
            double vertex = grid[best] + kStep * 0.5 * (a - c) / denom;
            vertex = std::clamp(vertex, grid[best - 1], grid[best + 1]);
            LinkParams link = link_template;
            link.total_loss_db = vertex;
            const double qv = qber_analytic(link, spad).qber;
            if (qv < opt.qber) {
                opt.loss_db = vertex;
                opt.qber = qv;
            }
        }
    }
    return opt;
}

BudgetReport link_budget(double total_loss_db, double demod_insertion_db,
                         double receiver_coupling_saving_db) {
    if (!(total_loss_db >= 0.0))
        throw invariant_error("link_budget: total_loss_db must be >= 0");
    if (!(demod_insertion_db >= 0.0))
        throw invariant_error("link_budget: demod_insertion_db must be >= 0");
    BudgetReport rep;
    rep.budget_db =
        total_loss_db - demod_insertion_db + receiver_coupling_saving_db;
    rep.infeasible = rep.budget_db < 0.0;
    return rep;
}

}  // namespace ringdps
