#pragma once
// Discrete-round secure clustering simulation: rotating head election with
// trust-filtered joining, a first-order radio energy model, and the per-round
// evidence -> fuzzy trust -> model decision pipeline wired end to end.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <limits>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gantrust/autoencoder.hpp"
#include "gantrust/config.hpp"
#include "gantrust/core.hpp"
#include "gantrust/dataset.hpp"
#include "gantrust/decision.hpp"
#include "gantrust/fuzzy.hpp"

namespace gantrust {

enum class Role { Super, Advanced, Generic };
enum class Capability { None, Higher, Medium, Lower };  // None == well-behaved

// join_cluster outcomes that are not a head id.
inline constexpr int kSelfHead = -1;
inline constexpr int kDirectToBs = -2;
inline constexpr int kNoHead = -3;

// Rolling observation state one device keeps about one neighbour. Trust is
// re-evaluated every round; between observations the window is frozen, so the
// cached value repeats into the history.
struct NeighborTrack {
    std::deque<BehaviorOutcome> window;  // most recent overheard behaviours
    std::deque<double> trust_history;    // most recent trust values (1/round)
    long long version = 0;               // total outcomes ever appended
    bool dirty = false;                  // appended since the last evaluation
    double last_value = 1.0;             // trust of the current window
    int last_history_round = 0;          // round of the newest trust value
    bool history_uniform = true;         // all history values identical
    long long history_version = 0;       // bumps when history content changes
    bool condemned = false;              // verdict reached Untrusted; no redemption

    // Verdict cache, keyed on history and decision-state versions.
    TrustVerdict cached_verdict;
    bool has_cached = false;
    long long cached_version = -1;
    long long cached_decision_version = -1;

    Vec last_tested;  // last vector run through the classifier (skip repeats)
};

struct Device {
    int id = 0;
    double x = 0.0, y = 0.0;
    Role role = Role::Generic;
    Capability capability = Capability::None;  // != None marks a malicious device
    double energy = 0.0;
    bool alive = true;
    int eligible_from = 1;  // first round this device may stand for election

    std::map<int, NeighborTrack> track;    // keyed by observed device id
    std::optional<AutoencoderModel> model;  // Super: own; Advanced: shared copy
    std::vector<TrustVector> collected;     // Super: pool for dataset building
    std::map<int, ThresholdRecommendation> recommendations;  // Generic: per sender
    std::optional<double> threshold;                         // Generic: aggregated
    long long decision_version = 0;  // bumps on model/threshold updates
    int next_train_attempt = 0;      // earliest round for another training try

    // Per-round transient state, rebuilt by each round's phases.
    bool is_head = false;
    int head_id = kNoHead;
    bool direct_bs = false;
    int packets_held = 0;  // member packets successfully received this round

    bool malicious() const { return capability != Capability::None; }
};

struct Cluster {
    int head = kNoHead;
    std::vector<int> members;  // id-ascending; doubles as the TDMA slot order
};

struct Event {
    int round = 0;
    std::string kind;
    int actor = -1;
    int target = -1;
    std::string value;

    bool operator==(const Event&) const = default;
};

struct MetricsRow {
    int round = 0;
    int alive = 0;
    long long delivered = 0;  // packets credited to throughput this round
    long long attacks = 0;    // attack events this round
    double energy_remaining = 0.0;
};

struct RadioModel {
    double e_elec = 50e-9;
    double eps_fs = 10e-12;
    double eps_mp = 0.0013e-12;

    double d0() const { return std::sqrt(eps_fs / eps_mp); }
};

struct NetworkState {
    ScenarioConfig cfg;
    FuzzyModel fuzzy;
    std::vector<Device> devices;  // device id == index
    Rng rng;
    int round = 0;  // round currently being simulated (last one once returned)

    std::vector<Event> events;
    std::vector<MetricsRow> metrics;
    std::vector<Cluster> clusters;          // formed in the current round
    std::vector<int> direct_senders;        // fallback senders, current round
    TrainStats last_train_stats;            // most recent Super training curves
    bool have_train_stats = false;

    // Cumulative counters.
    long long total_attacks = 0;
    long long total_delivered = 0;
    long long total_sent = 0;      // packets actually transmitted
    long long total_forwards = 0;  // aggregate forwards (attack opportunities)
    int last_attack_round = 0;
    int first_death_round = 0;  // 0 while nobody died
    int half_death_round = 0;
    int dead_count = 0;

    // Per-round tallies feeding the metrics row.
    long long round_delivered = 0;
    long long round_attacks = 0;

    // Fuzzy evaluations depend only on kind counts and window size; memoize.
    std::map<std::array<long long, 4>, double> trust_memo;

    double initial_total_energy = 0.0;
    double consumed_energy = 0.0;

    RadioModel radio() const { return {cfg.e_elec, cfg.eps_fs, cfg.eps_mp}; }
};

// --- Pure building blocks -----------------------------------------------------

// Rotating-election threshold for an eligible device; r0 counts rounds from 0.
inline double election_threshold(double p, int r0) {
    const int period = std::max(1, static_cast<int>(std::floor(1.0 / p + 1e-9)));
    return p / (1.0 - p * static_cast<double>(r0 % period));
}

inline int election_period(double p) {
    return std::max(1, static_cast<int>(std::floor(1.0 / p + 1e-9)));
}

// One forwarding decision: malicious devices misbehave with the probability of
// their capability tier (kind uniform over Drop/Delay/Tamper); honest devices
// suffer rare faults that can only drop or delay.
inline BehaviorKind apply_behavior(Capability cap, const ScenarioConfig& cfg, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (cap != Capability::None) {
        const double p = cap == Capability::Higher   ? cfg.misbehave_higher
                         : cap == Capability::Medium ? cfg.misbehave_medium
                                                     : cfg.misbehave_lower;
        if (u(rng) < p) {
            const double k = u(rng);
            if (k < 1.0 / 3.0) return BehaviorKind::Drop;
            if (k < 2.0 / 3.0) return BehaviorKind::Delay;
            return BehaviorKind::Tamper;
        }
        return BehaviorKind::TimelyForward;
    }
    if (u(rng) < cfg.fault_prob)
        return u(rng) < 0.5 ? BehaviorKind::Drop : BehaviorKind::Delay;
    return BehaviorKind::TimelyForward;
}

inline const char* behavior_name(BehaviorKind k) {
    switch (k) {
        case BehaviorKind::TimelyForward: return "timely";
        case BehaviorKind::Drop: return "drop";
        case BehaviorKind::Delay: return "delay";
        case BehaviorKind::Tamper: return "tamper";
    }
    return "timely";
}

inline double energy_tx(const RadioModel& r, double bits, double d) {
    if (d < r.d0()) return bits * r.e_elec + bits * r.eps_fs * d * d;
    return bits * r.e_elec + bits * r.eps_mp * d * d * d * d;
}

inline double energy_rx(const RadioModel& r, double bits) { return bits * r.e_elec; }

struct HeadCandidate {
    int id = -1;
    double distance = 0.0;
};

// Picks the nearest candidate head the device trusts (ties to the lower id).
// With no trusted candidate an election-eligible device heads itself; an
// ineligible one sends straight to the base station.
inline int join_cluster(std::span<const HeadCandidate> candidates,
                        const std::function<Verdict(int)>& verdict_of, bool election_eligible) {
    int best = kNoHead;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        if (verdict_of(c.id) != Verdict::Trusted) continue;
        if (c.distance < best_d || (c.distance == best_d && c.id < best)) {
            best = c.id;
            best_d = c.distance;
        }
    }
    if (best != kNoHead) return best;
    return election_eligible ? kSelfHead : kDirectToBs;
}

// --- State helpers ------------------------------------------------------------

inline double device_distance(const Device& a, const Device& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

inline double distance_to_bs(const NetworkState& st, const Device& d) {
    return std::hypot(d.x - st.cfg.bs_x, d.y - st.cfg.bs_y);
}

inline void add_event(NetworkState& st, std::string kind, int actor, int target,
                      std::string value = "") {
    st.events.push_back({st.round, std::move(kind), actor, target, std::move(value)});
}

// CSV- and determinism-safe free text: one token, no separators.
inline std::string sanitize_event_text(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == ' ' || c == '\t') c = '_';
    return s;
}

// Deducts up to `cost`; false when the device could not pay in full (the
// action fails and the device runs dry, to be marked dead at the boundary).
inline bool spend_energy(NetworkState& st, Device& d, double cost) {
    const double paid = std::min(cost, d.energy);
    d.energy -= paid;
    st.consumed_energy += paid;
    return paid == cost;
}

inline void mark_deaths(NetworkState& st) {
    for (Device& d : st.devices) {
        if (!d.alive || d.energy > 0.0) continue;
        d.alive = false;
        d.energy = 0.0;
        st.dead_count++;
        add_event(st, "death", d.id, -1);
        if (st.first_death_round == 0) st.first_death_round = st.round;
        const int half = (static_cast<int>(st.devices.size()) + 1) / 2;
        if (st.half_death_round == 0 && st.dead_count >= half) st.half_death_round = st.round;
    }
}

// Fuzzy trust of one evidence window, memoized on kind counts.
inline double window_trust(NetworkState& st, const std::deque<BehaviorOutcome>& window) {
    std::array<long long, 4> key{0, 0, 0, static_cast<long long>(window.size())};
    for (const auto& o : window) {
        if (o.kind == BehaviorKind::Drop) key[0]++;
        else if (o.kind == BehaviorKind::Delay) key[1]++;
        else if (o.kind == BehaviorKind::Tamper) key[2]++;
    }
    auto it = st.trust_memo.find(key);
    if (it != st.trust_memo.end()) return it->second;
    std::vector<BehaviorOutcome> span_copy(window.begin(), window.end());
    TrustAttributes attrs = compute_trust_attributes(
        span_copy, static_cast<std::size_t>(st.cfg.window_len));
    double value = evaluate_trust(attrs, st.fuzzy, st.round).value;
    st.trust_memo.emplace(key, value);
    return value;
}

// --- Verdicts -----------------------------------------------------------------

// An observer's own judgement of a target.  `decided` distinguishes a
// conclusion backed by evidence and an evaluation capability from the
// cooperative default that lets the network bootstrap.
struct RawOpinion {
    Verdict verdict = Verdict::Trusted;
    bool decided = false;
};

inline RawOpinion raw_opinion(NetworkState& st, Device& o, int target) {
    if (o.id == target) return {Verdict::Trusted, true};
    auto it = o.track.find(target);
    const NeighborTrack* tr = it == o.track.end() ? nullptr : &it->second;
    if (tr && tr->condemned) return {Verdict::Untrusted, true};
    if (o.model && o.model->calibrated && tr &&
        tr->trust_history.size() == static_cast<std::size_t>(st.cfg.vector_len)) {
        TrustVector v{target, Vec(tr->trust_history.begin(), tr->trust_history.end()),
                      tr->last_history_round};
        return {decide(*o.model, v).verdict, true};
    }
    if (o.threshold && tr && !tr->trust_history.empty())
        return {generic_decide(tr->trust_history.back(), *o.threshold), true};
    return {Verdict::Trusted, false};
}

inline Verdict raw_verdict(NetworkState& st, Device& o, int target) {
    return raw_opinion(st, o, target).verdict;
}

// Full verdict with caching and synergetic resolution.  Besides genuinely
// Uncertain classifier outcomes, an observer that cannot judge for itself
// after the bootstrap grace period asks its neighbourhood rather than keep
// extending blank trust; only evidence-backed opinions count as vouches.
inline Verdict verdict_of(NetworkState& st, Device& o, int target) {
    if (o.id == target) return Verdict::Trusted;
    auto it = o.track.find(target);
    NeighborTrack* tr = it == o.track.end() ? nullptr : &it->second;
    if (tr && tr->condemned) return Verdict::Untrusted;

    if (tr && tr->has_cached && tr->cached_version == tr->history_version &&
        tr->cached_decision_version == o.decision_version) {
        const bool temp_trust = tr->cached_verdict.basis == VerdictBasis::Synergetic &&
                                tr->cached_verdict.verdict == Verdict::Trusted;
        if (!temp_trust || !synergetic_expired(tr->cached_verdict, st.round,
                                               st.cfg.temp_trust_rounds))
            return tr->cached_verdict.verdict;
    }

    const RawOpinion own = raw_opinion(st, o, target);
    TrustVerdict result;
    result.round = st.round;
    result.verdict = own.verdict;
    result.basis = o.model && o.model->calibrated ? VerdictBasis::Classifier
                                                  : VerdictBasis::Threshold;
    const bool mature = st.round > st.cfg.bootstrap_rounds;
    if (own.verdict == Verdict::Uncertain || (!own.decided && mature)) {
        std::vector<Recommendation> recs;
        for (Device& r : st.devices) {
            if (!r.alive || r.id == o.id || r.id == target) continue;
            if (device_distance(o, r) > st.cfg.radio_range) continue;
            const RawOpinion rec = raw_opinion(st, r, target);
            if (!rec.decided) continue;
            recs.push_back({r.id, rec.verdict, raw_verdict(st, o, r.id)});
        }
        // An anomalous (Uncertain) finding demands positive reassurance, no
        // matter how few neighbours can speak.  A blank default is different:
        // the vote only replaces optimism once enough informed neighbours
        // exist to possibly grant it.
        if (own.verdict == Verdict::Uncertain ||
            static_cast<int>(recs.size()) >= st.cfg.recommenders_required)
            result = synergetic_resolve(recs, st.round, st.cfg.recommenders_required);
    }
    if (!tr) return result.verdict;  // nothing observed yet: nowhere to cache
    // No redemption path: an Untrusted conclusion, however reached, is final
    // for this observer.  Redeeming misbehaving devices is left out by design.
    if (result.verdict == Verdict::Untrusted) tr->condemned = true;
    tr->cached_verdict = result;
    tr->has_cached = true;
    tr->cached_version = tr->history_version;
    tr->cached_decision_version = o.decision_version;
    return result.verdict;
}

// --- Network construction -----------------------------------------------------

inline NetworkState init_network(const ScenarioConfig& cfg) {
    validate_config(cfg);
    NetworkState st;
    st.cfg = cfg;
    st.fuzzy = fuzzy_model_from(cfg);
    st.rng.seed(cfg.seed);

    const int n = cfg.device_count;
    st.devices.resize(static_cast<std::size_t>(n));
    std::uniform_real_distribution<double> ux(0.0, cfg.field_width);
    std::uniform_real_distribution<double> uy(0.0, cfg.field_height);
    for (int i = 0; i < n; ++i) {
        Device& d = st.devices[static_cast<std::size_t>(i)];
        d.id = i;
        d.x = ux(st.rng);
        d.y = uy(st.rng);
        d.energy = cfg.initial_energy;
        d.eligible_from = 1;
    }

    int n_super = static_cast<int>(std::llround(n * cfg.role_super_pct / 100.0));
    int n_adv = static_cast<int>(std::llround(n * cfg.role_advanced_pct / 100.0));
    n_super = std::min(n_super, n);
    n_adv = std::min(n_adv, n - n_super);
    for (int i = 0; i < n; ++i)
        st.devices[static_cast<std::size_t>(i)].role =
            i < n_super ? Role::Super : i < n_super + n_adv ? Role::Advanced : Role::Generic;

    // Malicious subset and capability tiers, drawn independently of role.
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(st.rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
    }
    const int n_mal = static_cast<int>(std::llround(n * cfg.malicious_pct / 100.0));
    int nh = static_cast<int>(std::llround(n_mal * cfg.cap_higher_pct / 100.0));
    int nm = static_cast<int>(std::llround(n_mal * cfg.cap_medium_pct / 100.0));
    nh = std::min(nh, n_mal);
    nm = std::min(nm, n_mal - nh);
    for (int i = 0; i < n_mal; ++i) {
        Capability cap = i < nh                ? Capability::Higher
                         : i < nh + nm         ? Capability::Medium
                                               : Capability::Lower;
        st.devices[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])].capability = cap;
    }

    st.initial_total_energy = static_cast<double>(n) * cfg.initial_energy;
    return st;
}

// --- Round phases -------------------------------------------------------------

inline void phase_elect(NetworkState& st) {
    const int period = election_period(st.cfg.election_p);
    const int r0 = st.round - 1;
    st.clusters.clear();
    st.direct_senders.clear();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Device& d : st.devices) {
        d.is_head = false;
        d.head_id = kNoHead;
        d.direct_bs = false;
        d.packets_held = 0;
        if (!d.alive || st.round < d.eligible_from) continue;
        const double th = election_threshold(st.cfg.election_p, r0);
        if (u(st.rng) < th) {
            d.is_head = true;
            d.eligible_from = st.round + period;
            add_event(st, "elect", d.id, -1);
        }
    }
}

inline void phase_join(NetworkState& st) {
    const int period = election_period(st.cfg.election_p);
    std::map<int, Cluster> clusters;
    for (const Device& d : st.devices)
        if (d.alive && d.is_head) clusters[d.id] = Cluster{d.id, {}};

    for (Device& d : st.devices) {
        if (!d.alive || d.is_head) continue;
        std::vector<HeadCandidate> candidates;
        for (const auto& [hid, c] : clusters) {
            const Device& h = st.devices[static_cast<std::size_t>(hid)];
            if (!h.is_head) continue;  // self-heads never take members this round
            const double dist = device_distance(d, h);
            if (dist <= st.cfg.radio_range) candidates.push_back({hid, dist});
        }
        auto verdict_fn = [&](int hid) { return verdict_of(st, d, hid); };
        const bool eligible = st.round >= d.eligible_from;
        const int choice = join_cluster(candidates, verdict_fn, eligible);
        if (choice >= 0) {
            d.head_id = choice;
            clusters[choice].members.push_back(d.id);
            add_event(st, "join", d.id, choice);
        } else if (choice == kSelfHead) {
            // Promoted to head after joining ends; later joiners skip it this
            // round because its is_head flag is still clear.
            d.head_id = d.id;
            d.eligible_from = st.round + period;  // heading costs an election turn
            clusters[d.id] = Cluster{d.id, {}};
            add_event(st, "self_head", d.id, -1);
        } else {
            d.direct_bs = true;
            st.direct_senders.push_back(d.id);
            add_event(st, "direct_bs", d.id, -1);
        }
    }
    // Promote the self-heads now that joining is over.
    for (auto& [hid, c] : clusters) st.devices[static_cast<std::size_t>(hid)].is_head = true;
    st.clusters.reserve(clusters.size());
    for (auto& [hid, c] : clusters) st.clusters.push_back(std::move(c));
}

inline void phase_tdma(NetworkState& st) {
    const double bits = st.cfg.packet_bits;
    const RadioModel radio = st.radio();
    for (const Cluster& c : st.clusters) {
        Device& head = st.devices[static_cast<std::size_t>(c.head)];
        for (int mid : c.members) {
            Device& m = st.devices[static_cast<std::size_t>(mid)];
            if (!m.alive) continue;
            const double cost = energy_tx(radio, bits, device_distance(m, head));
            if (!spend_energy(st, m, cost)) continue;  // ran dry mid-send
            st.total_sent++;
            if (!head.alive) continue;
            if (spend_energy(st, head, energy_rx(radio, bits))) head.packets_held++;
        }
    }
}

inline void record_observation(NetworkState& st, Device& observer, int target,
                               BehaviorKind kind) {
    NeighborTrack& tr = observer.track[target];
    tr.window.push_back({kind, st.round});
    while (tr.window.size() > static_cast<std::size_t>(st.cfg.window_len)) tr.window.pop_front();
    tr.version++;
    tr.dirty = true;
    // Faulty-but-honest devices only ever drop or delay; a tampered forward is
    // positive proof of malice and condemns the forwarder on the spot.
    if (kind == BehaviorKind::Tamper) tr.condemned = true;
}

inline void phase_forward(NetworkState& st) {
    const double bits = st.cfg.packet_bits;
    const RadioModel radio = st.radio();
    for (const Cluster& c : st.clusters) {
        Device& head = st.devices[static_cast<std::size_t>(c.head)];
        if (!head.alive) continue;
        const double bs_cost = energy_tx(radio, bits, distance_to_bs(st, head));
        const int m = head.packets_held;
        if (m == 0) {
            // Nothing aggregated: the head delivers its own reading directly.
            if (!spend_energy(st, head, bs_cost)) continue;
            st.total_sent++;
            st.total_delivered++;
            st.round_delivered++;
            add_event(st, "deliver", head.id, -1, "1");
            continue;
        }
        const BehaviorKind outcome = apply_behavior(head.capability, st.cfg, st.rng);
        st.total_forwards++;
        if (outcome != BehaviorKind::Drop) {
            if (!spend_energy(st, head, bs_cost)) continue;  // died silently mid-send
            st.total_sent++;
        }
        add_event(st, "forward", head.id, -1, behavior_name(outcome));
        if (outcome == BehaviorKind::TimelyForward) {
            const long long delivered = m + 1;
            st.total_delivered += delivered;
            st.round_delivered += delivered;
            add_event(st, "deliver", head.id, -1, std::to_string(delivered));
        } else if (head.malicious()) {
            st.total_attacks++;
            st.round_attacks++;
            st.last_attack_round = st.round;
            add_event(st, "attack", head.id, -1, behavior_name(outcome));
        }
        // Every device inside overhearing range witnesses the forward; the
        // members are always among them since they sit within radio range.
        for (Device& observer : st.devices) {
            if (!observer.alive || observer.id == head.id) continue;
            if (device_distance(observer, head) > st.cfg.radio_range) continue;
            record_observation(st, observer, head.id, outcome);
        }
    }
    for (int did : st.direct_senders) {
        Device& d = st.devices[static_cast<std::size_t>(did)];
        if (!d.alive) continue;
        if (!spend_energy(st, d, energy_tx(radio, bits, distance_to_bs(st, d)))) continue;
        st.total_sent++;
        st.total_delivered++;
        st.round_delivered++;
        add_event(st, "deliver", d.id, -1, "1");
    }
}

inline void phase_trust(NetworkState& st) {
    const std::size_t len = static_cast<std::size_t>(st.cfg.vector_len);
    for (Device& o : st.devices) {
        if (!o.alive) continue;
        for (auto& [target, tr] : o.track) {
            if (tr.dirty) {
                tr.dirty = false;
                tr.last_value = window_trust(st, tr.window);
            }
            const double value = tr.last_value;
            const bool was_full = tr.trust_history.size() == len;
            tr.history_uniform = tr.trust_history.empty() ||
                                 (tr.history_uniform && tr.trust_history.back() == value);
            tr.trust_history.push_back(value);
            while (tr.trust_history.size() > len) tr.trust_history.pop_front();
            if (!(was_full && tr.history_uniform)) tr.history_version++;
            tr.last_history_round = st.round;
            if (o.role == Role::Super && tr.trust_history.size() == len) {
                o.collected.push_back(
                    {target, Vec(tr.trust_history.begin(), tr.trust_history.end()), st.round});
                while (o.collected.size() > static_cast<std::size_t>(st.cfg.dataset_cap))
                    o.collected.erase(o.collected.begin());
            }
        }
    }
}

inline void share_model(NetworkState& st, Device& o) {
    for (Device& a : st.devices) {
        if (!a.alive || a.role != Role::Advanced || a.id == o.id) continue;
        if (device_distance(o, a) > st.cfg.radio_range) continue;
        AutoencoderModel copy = *o.model;
        copy.training_set.clear();
        copy.pending.clear();
        a.model = std::move(copy);
        a.decision_version++;
        add_event(st, "share", o.id, a.id);
    }
}

inline void recommend_thresholds(NetworkState& st, Device& o) {
    const double value = recommend_threshold(o.model->training_set);
    char text[32];
    std::snprintf(text, sizeof text, "%.17g", value);
    for (Device& g : st.devices) {
        if (!g.alive || g.role != Role::Generic) continue;
        if (device_distance(o, g) > st.cfg.radio_range) continue;
        g.recommendations[o.id] = {o.id, value, st.round};
        std::vector<ThresholdRecommendation> received;
        received.reserve(g.recommendations.size());
        for (const auto& [sid, rec] : g.recommendations) received.push_back(rec);
        g.threshold = aggregate_thresholds(received, st.cfg.threshold_gap);
        g.decision_version++;
        add_event(st, "recommend", o.id, g.id, text);
    }
}

// Runs the dataset pipeline and initial training on one Super device.
// Structural failures (degenerate pools) postpone; divergence propagates.
inline void attempt_initial_training(NetworkState& st, Device& o) {
    try {
        // Train on the freshest slice of the pool; the trigger quantity also
        // bounds the initial set so startup cost stays flat as the pool grows.
        const std::size_t take = std::min(
            o.collected.size(), static_cast<std::size_t>(st.cfg.min_training_vectors));
        const std::vector<TrustVector> pool(o.collected.end() - static_cast<std::ptrdiff_t>(take),
                                            o.collected.end());
        PcaModel pca = pca_fit(pool, st.cfg.variance_target,
                               static_cast<std::size_t>(st.cfg.max_components));
        std::vector<Vec> points;
        points.reserve(pool.size());
        for (const auto& v : pool) points.push_back(pca_transform(pca, v));
        KmeansResult km =
            kmeans_cluster(points, 3, derive_seed(st.cfg.seed, 0x6b6d31, o.id),
                           st.cfg.kmeans_max_iters, st.cfg.kmeans_restarts);
        LabeledDataset labeled = label_levels(km, pool);
        LabeledDataset training = build_training_set(labeled);
        AutoencoderModel model =
            build_model(ae_config_from(st.cfg), derive_seed(st.cfg.seed, 0x6275, o.id));
        TrainStats stats =
            train(model, training, st.cfg.epochs_initial,
                  static_cast<std::size_t>(st.cfg.batch_size),
                  derive_seed(st.cfg.seed, 0x7472, o.id));
        calibrate_thresholds(model, training);
        o.model = std::move(model);
        o.decision_version++;
        st.last_train_stats = std::move(stats);
        st.have_train_stats = true;
        add_event(st, "train", o.id, -1, std::to_string(training.size()));
        share_model(st, o);
        recommend_thresholds(st, o);
    } catch (const TrainingDivergence&) {
        throw;
    } catch (const std::exception& e) {
        o.next_train_attempt = st.round + st.cfg.train_retry_gap;
        add_event(st, "train_postponed", o.id, -1, sanitize_event_text(e.what()));
    }
}

inline void phase_models(NetworkState& st) {
    for (Device& o : st.devices) {
        if (!o.alive) continue;
        if (o.model && o.model->calibrated) {
            std::vector<TrustVector> fresh;
            for (auto& [target, tr] : o.track) {
                if (tr.condemned) continue;  // verdict is final, nothing to test
                if (tr.last_history_round != st.round) continue;
                if (tr.trust_history.size() != static_cast<std::size_t>(st.cfg.vector_len))
                    continue;
                Vec v(tr.trust_history.begin(), tr.trust_history.end());
                if (v == tr.last_tested) continue;  // unchanged vector, same verdict
                tr.last_tested = v;
                TrustVector tv{target, std::move(v), st.round};
                TrustVerdict verdict = decide(*o.model, tv);
                if (verdict.verdict == Verdict::Uncertain) {
                    // Leave uncached so verdict_of can attempt synergetic
                    // resolution when the verdict is actually needed.
                    tr.has_cached = false;
                } else {
                    if (verdict.verdict == Verdict::Untrusted) tr.condemned = true;
                    tr.cached_verdict = verdict;
                    tr.has_cached = true;
                    tr.cached_version = tr.history_version;
                    tr.cached_decision_version = o.decision_version;
                }
                fresh.push_back(std::move(tv));
            }
            if (!fresh.empty()) {
                EligibleResult el = collect_eligible(*o.model, fresh);
                if (o.role == Role::Super && el.retrain_due) {
                    try {
                        retrain(*o.model, st.cfg.epochs_update,
                                derive_seed(st.cfg.seed, 0x7265,
                                            static_cast<std::uint64_t>(o.id) * 1000000ULL +
                                                static_cast<std::uint64_t>(st.round)));
                        o.decision_version++;
                        add_event(st, "retrain", o.id, -1,
                                  std::to_string(o.model->training_set.size()));
                        share_model(st, o);
                        recommend_thresholds(st, o);
                    } catch (const TrainingDivergence&) {
                        throw;
                    } catch (const std::exception& e) {
                        o.model->pending.clear();
                        add_event(st, "retrain_failed", o.id, -1,
                                  sanitize_event_text(e.what()));
                    }
                } else if (o.role == Role::Advanced &&
                           o.model->pending.size() >
                               static_cast<std::size_t>(st.cfg.dataset_cap)) {
                    // Advanced devices never retrain; keep their queue bounded.
                    o.model->pending.erase(
                        o.model->pending.begin(),
                        o.model->pending.end() -
                            static_cast<std::ptrdiff_t>(st.cfg.dataset_cap));
                }
            }
        }
        if (o.role == Role::Super && !o.model && st.round > st.cfg.bootstrap_rounds &&
            static_cast<int>(o.collected.size()) >= st.cfg.min_training_vectors &&
            st.round >= o.next_train_attempt)
            attempt_initial_training(st, o);
    }
}

inline void phase_metrics(NetworkState& st) {
    MetricsRow row;
    row.round = st.round;
    row.alive = static_cast<int>(st.devices.size()) - st.dead_count;
    row.delivered = st.round_delivered;
    row.attacks = st.round_attacks;
    for (const Device& d : st.devices) row.energy_remaining += d.energy;
    st.metrics.push_back(row);
}

inline void run_round(NetworkState& st) {
    st.round++;
    st.round_delivered = 0;
    st.round_attacks = 0;
    phase_elect(st);
    mark_deaths(st);
    phase_join(st);
    mark_deaths(st);
    phase_tdma(st);
    mark_deaths(st);
    phase_forward(st);
    mark_deaths(st);
    phase_trust(st);
    phase_models(st);
    mark_deaths(st);
    phase_metrics(st);
}

inline int alive_count(const NetworkState& st) {
    return static_cast<int>(st.devices.size()) - st.dead_count;
}

}  // namespace gantrust
