#include "ringdps/detector.hpp"

#include <algorithm>
#include <cmath>

#include "ringdps/errors.hpp"

namespace ringdps {

void SpadModel::validate() const {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw invariant_error("spad.eta must lie in [0, 1]");
    if (!(dark_cps >= 0.0))
        throw invariant_error("spad.dark_cps must be >= 0");
    if (!(afterpulse_prob >= 0.0 && afterpulse_prob < 1.0))
        throw invariant_error("spad.afterpulse_prob must lie in [0, 1)");
    if (!(detrap_time_s > 0.0))
        throw invariant_error("spad.detrap_time_s must be positive");
    if (!(dead_time_s >= 0.0))
        throw invariant_error("spad.dead_time_s must be >= 0");
}

double click_probability(double mean_photons, const SpadModel& spad, double slot_s) {
    if (!(mean_photons >= 0.0))
        throw invariant_error("click_probability: mean_photons must be >= 0");
    return -std::expm1(-(spad.eta * mean_photons + spad.dark_cps * slot_s));
}

ClickSimulator::ClickSimulator(const SpadModel& spad, std::uint64_t seed)
    : spad_(spad), seed_(seed), primary_(mix_seed(seed, 0x5EED0001ULL)) {
    spad_.validate();
}

ClickSimulator::FrameCounts ClickSimulator::process_frame(
    const SlotEnergies& slots, const std::vector<std::uint8_t>& diff_bits,
    std::size_t counted_begin, std::size_t counted_end, ClickTrain* train) {
    const std::size_t n = slots.photons.size();
    if (diff_bits.size() != n)
        throw invariant_error("simulate_clicks: bits/slots length mismatch");
    if (!(slots.slot_period_s > 0.0) || !(slots.slot_duration_s > 0.0))
        throw invariant_error("simulate_clicks: slot durations must be positive");

    // Slot-unit conversions are fixed by the first frame and must not change
    // mid-run.
    const double tau_slots = spad_.detrap_time_s / slots.slot_period_s;
    const auto n_dead =
        static_cast<std::uint64_t>(std::llround(spad_.dead_time_s / slots.slot_period_s));
    if (global_slot_ == 0) {
        tau_slots_ = tau_slots;
        n_dead_slots_ = n_dead;
    } else if (std::abs(tau_slots - tau_slots_) > 1e-9 || n_dead != n_dead_slots_) {
        throw invariant_error("simulate_clicks: slot timing changed between frames");
    }

    if (train) {
        train->clicks.assign(n, 0);
        train->causes.assign(n, ClickCause::signal);
        train->slot_duration_s = slots.slot_duration_s;
        train->seed = seed_;
    }

    FrameCounts counts;
    const double dark_exposure = spad_.dark_cps * slots.slot_duration_s;

    auto attempt_click = [&](std::uint64_t gslot, std::size_t local,
                             ClickCause cause) {
        if (static_cast<std::int64_t>(gslot) <= dead_until_) return;

        // registered: decay the trap stack to now, deposit this avalanche
        if (any_click_) {
            trap_level_ *= std::exp(-static_cast<double>(
                               static_cast<std::int64_t>(gslot) - last_click_slot_) /
                               tau_slots_);
        } else {
            trap_level_ = 0.0;
        }
        trap_level_ += 1.0;
        last_click_slot_ = static_cast<std::int64_t>(gslot);
        any_click_ = true;
        dead_until_ = static_cast<std::int64_t>(gslot + n_dead_slots_);

        ++counts.clicks_all;
        if (local >= counted_begin && local < counted_end) {
            ++counts.clicks_total;
            if (!diff_bits[local]) ++counts.clicks_space;
        }
        if (train) {
            train->clicks[local] = 1;
            train->causes[local] = cause;
        }

        // one afterpulse candidate, from a per-click engine keyed by the
        // global slot so matched-seed runs stay aligned click for click
        rng engine(mix_seed(seed_, stream_tag::afterpulse, gslot));
        const double p_cand = std::min(1.0, spad_.afterpulse_prob * trap_level_);
        if (p_cand > 0.0 && engine.uniform() < p_cand) {
            const double delay_slots = tau_slots_ * engine.exponential();
            const auto arrival =
                gslot + 1 + static_cast<std::uint64_t>(delay_slots);
            pending_.insert(std::upper_bound(pending_.begin(), pending_.end(), arrival),
                            arrival);
        }
    };

    for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t gslot = global_slot_ + k;
        const double u = primary_.uniform();   // drawn every slot, dead or not

        // trap releases scheduled for this slot fire before the primary
        while (!pending_.empty() && pending_.front() <= gslot) {
            const std::uint64_t arrival = pending_.front();
            pending_.erase(pending_.begin());
            if (arrival == gslot) attempt_click(gslot, k, ClickCause::afterpulse);
        }

        const double p_signal = -std::expm1(-spad_.eta * slots.photons[k]);
        const double p_total =
            -std::expm1(-(spad_.eta * slots.photons[k] + dark_exposure));
        if (u < p_total) {
            attempt_click(gslot, k,
                          u < p_signal ? ClickCause::signal : ClickCause::dark);
        }
    }

    global_slot_ += n;
    return counts;
}

ClickTrain simulate_clicks(const SlotEnergies& slots, const SpadModel& spad,
                           std::uint64_t seed) {
    ClickSimulator sim(spad, seed);
    ClickTrain train;
    std::vector<std::uint8_t> no_bits(slots.photons.size(), 0);
    sim.process_frame(slots, no_bits, 0, slots.photons.size(), &train);
    return train;
}

}  // namespace ringdps
