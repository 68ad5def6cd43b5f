#include "tsrange/exchange.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "format.hpp"

namespace tsrange {

Schedule default_schedule(int messages, double t_min, double t_max) {
    if (messages < 1) throw std::invalid_argument("default_schedule: need at least 1 message");
    if (!(t_min < t_max)) throw std::invalid_argument("default_schedule: empty span");
    Schedule sch;
    sch.transmit_times.resize(static_cast<std::size_t>(messages));
    sch.directions.resize(static_cast<std::size_t>(messages));
    const double step = messages > 1 ? (t_max - t_min) / (messages - 1) : 0.0;
    for (int k = 0; k < messages; ++k) {
        sch.transmit_times[static_cast<std::size_t>(k)] = t_min + step * k;
        sch.directions[static_cast<std::size_t>(k)] = (k % 2 == 0) ? +1 : -1;
    }
    return sch;
}

const PairLog* ExchangeLog::find(const PairIndex& pair) const {
    for (const auto& entry : entries)
        if (entry.pair == pair) return &entry;
    return nullptr;
}

PairLog generate_pair_log(const Scenario& scenario, const PairIndex& pair,
                          const Schedule& schedule, const NoiseSpec& noise, RngStream& rng) {
    pair_index(pair.i, pair.j, scenario.nodes); // validates the pair
    if (noise.sigma < 0.0) throw std::invalid_argument("generate_pair_log: negative sigma");

    const auto calib_i =
        calib_from_clock(scenario.clocks[static_cast<std::size_t>(pair.i - 1)]);
    const auto calib_j =
        calib_from_clock(scenario.clocks[static_cast<std::size_t>(pair.j - 1)]);
    const auto dr = derived_from_range(scenario.range_of(pair), calib_i, scenario.wave_speed);

    const int K = schedule.messages();
    PairLog log;
    log.pair = pair;
    log.directions = schedule.directions;
    log.stamps_i.resize(static_cast<std::size_t>(K));
    log.stamps_j.resize(static_cast<std::size_t>(K));

    // node i's timeline carries the schedule; the matching stamp at node j
    // follows from  alpha_j*t_ji + beta_j = alpha_i*t_ij + beta_i + e*tau(t_ij)
    for (int k = 0; k < K; ++k) {
        const double t_ij = schedule.transmit_times[static_cast<std::size_t>(k)];
        const double e = schedule.directions[static_cast<std::size_t>(k)];
        const double t_ji = (calib_i.alpha * t_ij + calib_i.beta - calib_j.beta +
                             e * delay_local(dr, t_ij)) /
                            calib_j.alpha;
        log.stamps_i[static_cast<std::size_t>(k)] = t_ij;
        log.stamps_j[static_cast<std::size_t>(k)] = t_ji;
    }
    if (noise.sigma > 0.0) {
        const double dev = std::sqrt(0.5) * noise.sigma;
        for (auto& s : log.stamps_i) s += rng.normal(dev);
        for (auto& s : log.stamps_j) s += rng.normal(dev);
    }
    return log;
}

ExchangeLog simulate_network(const Scenario& scenario, const Schedule& schedule,
                             const NoiseSpec& noise, const std::vector<PairIndex>& pairs,
                             RngStream& rng) {
    if (pairs.empty()) throw std::invalid_argument("simulate_network: no pairs requested");
    std::vector<PairIndex> ordered = pairs;
    std::sort(ordered.begin(), ordered.end(), [&](const PairIndex& a, const PairIndex& b) {
        return pair_index(a.i, a.j, scenario.nodes) < pair_index(b.i, b.j, scenario.nodes);
    });
    for (std::size_t p = 1; p < ordered.size(); ++p)
        if (ordered[p] == ordered[p - 1])
            throw std::invalid_argument("simulate_network: duplicate pair requested");

    ExchangeLog log;
    log.entries.reserve(ordered.size());
    for (const auto& pair : ordered)
        log.entries.push_back(generate_pair_log(scenario, pair, schedule, noise, rng));
    return log;
}

ExchangeLog simulate_network(const Scenario& scenario, const Schedule& schedule,
                             const NoiseSpec& noise, const std::vector<PairIndex>& pairs) {
    RngStream rng(noise.seed);
    return simulate_network(scenario, schedule, noise, pairs, rng);
}

void write_exchange_csv(std::ostream& out, const ExchangeLog& log) {
    out << "i,j,k,direction,t_ij_seconds,t_ji_seconds\n";
    for (const auto& entry : log.entries) {
        for (int k = 0; k < entry.messages(); ++k) {
            out << entry.pair.i << ',' << entry.pair.j << ',' << k + 1 << ','
                << entry.directions[static_cast<std::size_t>(k)] << ','
                << detail::format_double(entry.stamps_i[static_cast<std::size_t>(k)]) << ','
                << detail::format_double(entry.stamps_j[static_cast<std::size_t>(k)]) << '\n';
        }
    }
}

ExchangeLog read_exchange_csv(std::istream& in) {
    struct Row {
        int k;
        int dir;
        double t_ij;
        double t_ji;
    };
    std::map<std::pair<int, int>, std::vector<Row>> by_pair;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("i,", 0) == 0) continue; // header
        }
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 6)
            throw std::invalid_argument("exchange csv: expected 6 columns, got line: " + line);
        const int i = detail::parse_int(fields[0]);
        const int j = detail::parse_int(fields[1]);
        const Row row{detail::parse_int(fields[2]), detail::parse_int(fields[3]),
                      detail::parse_double(fields[4]), detail::parse_double(fields[5])};
        if (i < 1 || j <= i) throw std::invalid_argument("exchange csv: bad pair ids: " + line);
        if (row.dir != 1 && row.dir != -1)
            throw std::invalid_argument("exchange csv: direction must be +/-1: " + line);
        by_pair[{i, j}].push_back(row);
    }
    ExchangeLog log;
    log.entries.reserve(by_pair.size());
    for (auto& [key, rows] : by_pair) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.k < b.k; });
        PairLog entry;
        entry.pair = PairIndex{key.first, key.second};
        for (const auto& row : rows) {
            entry.directions.push_back(row.dir);
            entry.stamps_i.push_back(row.t_ij);
            entry.stamps_j.push_back(row.t_ji);
        }
        log.entries.push_back(std::move(entry));
    }
    return log;
}

} // namespace tsrange
