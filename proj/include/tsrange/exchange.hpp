#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tsrange/pairs.hpp"
#include "tsrange/rng.hpp"
#include "tsrange/scenario.hpp"

namespace tsrange {

/// Message schedule shared by every pair: K transmit epochs on the lower-id
/// node's local timeline and a +/-1 direction per message (+1 transmits from
/// the lower-id node).
struct Schedule {
    std::vector<double> transmit_times; // seconds, local to the pair's lower-id node
    std::vector<int> directions;        // +1 or -1

    int messages() const { return static_cast<int>(transmit_times.size()); }
};

/// K transmit times equally spaced on [t_min, t_max], directions alternating
/// +1, -1, +1, ... Throws std::invalid_argument for messages < 1 or an empty
/// span.
Schedule default_schedule(int messages, double t_min, double t_max);

/// Timestamp noise level. Each recorded timestamp gets an independent
/// N(0, 0.5*sigma^2) perturbation, so a two-way residual has variance sigma^2.
struct NoiseSpec {
    double sigma = 0.0;      // seconds
    std::uint64_t seed = 0;  // stream seed used by the convenience overload
};

/// Two-way timestamps of one pair: stamps_i[k] recorded at the lower-id node,
/// stamps_j[k] at the higher-id node, directions[k] = e_ij.
struct PairLog {
    PairIndex pair;
    std::vector<double> stamps_i;
    std::vector<double> stamps_j;
    std::vector<int> directions;

    int messages() const { return static_cast<int>(stamps_i.size()); }
};

/// All recorded pair logs, in pair_index order.
struct ExchangeLog {
    std::vector<PairLog> entries;

    const PairLog* find(const PairIndex& pair) const;
};

/// Generate one pair's log. The lower-id node's timestamps follow the
/// schedule exactly; the other side is placed where the clock and delay
/// models say the message lands, then both sides get timestamp noise.
/// sigma == 0 consumes no random draws.
PairLog generate_pair_log(const Scenario& scenario, const PairIndex& pair,
                          const Schedule& schedule, const NoiseSpec& noise,
                          RngStream& rng);

/// Logs for a subset of pairs (duplicates rejected). Entries come out in
/// pair_index order regardless of the order of `pairs`, and noise is drawn
/// in that order, pair by pair.
ExchangeLog simulate_network(const Scenario& scenario, const Schedule& schedule,
                             const NoiseSpec& noise, const std::vector<PairIndex>& pairs,
                             RngStream& rng);

/// Convenience overload seeding a fresh stream from noise.seed.
ExchangeLog simulate_network(const Scenario& scenario, const Schedule& schedule,
                             const NoiseSpec& noise, const std::vector<PairIndex>& pairs);

/// CSV round trip. Columns: i,j,k,direction,t_ij_seconds,t_ji_seconds with
/// k = 1..K and timestamps at full double precision.
void write_exchange_csv(std::ostream& out, const ExchangeLog& log);
ExchangeLog read_exchange_csv(std::istream& in);

} // namespace tsrange
