#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "gantrust/sim.hpp"

using namespace gantrust;

namespace {

// A scenario sized for fast dynamic tests: full device count but no model
// training (bootstrap pushed past the budget), so rounds cost microseconds.
ScenarioConfig quick_config(double malicious_pct, std::uint64_t seed, int budget) {
    ScenarioConfig cfg;
    cfg.malicious_pct = malicious_pct;
    cfg.seed = seed;
    cfg.round_budget = budget;
    cfg.bootstrap_rounds = budget + 1;  // keep training out of the loop
    return cfg;
}

NetworkState run_scenario_rounds(const ScenarioConfig& cfg) {
    NetworkState st = init_network(cfg);
    for (int r = 0; r < cfg.round_budget && alive_count(st) > 0; ++r) run_round(st);
    return st;
}

}  // namespace

TEST_CASE("election threshold follows the rotation formula") {
    CHECK(election_threshold(0.1, 0) == Catch::Approx(0.1).epsilon(1e-12));
    CHECK(election_threshold(0.1, 5) == Catch::Approx(0.1 / (1.0 - 0.5)).epsilon(1e-12));
    // Last slot of the period: every eligible device elects itself.
    CHECK(election_threshold(0.1, 9) == Catch::Approx(1.0).epsilon(1e-9));
    // The counter wraps with the period.
    CHECK(election_threshold(0.1, 10) == Catch::Approx(0.1).epsilon(1e-12));
    CHECK(election_period(0.1) == 10);
    CHECK(election_period(0.25) == 4);
    CHECK(election_period(1.0) == 1);
}

TEST_CASE("behavior draws match configured probabilities") {
    ScenarioConfig cfg;
    Rng rng(12345);
    const int trials = 100000;

    SECTION("higher capability: frequency 0.6, kinds uniform") {
        std::map<BehaviorKind, int> counts;
        for (int i = 0; i < trials; ++i) counts[apply_behavior(Capability::Higher, cfg, rng)]++;
        const double misbehave =
            1.0 - static_cast<double>(counts[BehaviorKind::TimelyForward]) / trials;
        CHECK(misbehave == Catch::Approx(0.6).margin(0.01));
        CHECK(static_cast<double>(counts[BehaviorKind::Drop]) / trials ==
              Catch::Approx(0.2).margin(0.01));
        CHECK(static_cast<double>(counts[BehaviorKind::Delay]) / trials ==
              Catch::Approx(0.2).margin(0.01));
        CHECK(static_cast<double>(counts[BehaviorKind::Tamper]) / trials ==
              Catch::Approx(0.2).margin(0.01));
    }

    SECTION("lower capability: frequency 0.2") {
        int misbehaved = 0;
        for (int i = 0; i < trials; ++i)
            misbehaved += apply_behavior(Capability::Lower, cfg, rng) != BehaviorKind::TimelyForward;
        CHECK(static_cast<double>(misbehaved) / trials == Catch::Approx(0.2).margin(0.01));
    }

    SECTION("honest faults are rare and never tamper") {
        std::map<BehaviorKind, int> counts;
        for (int i = 0; i < trials; ++i) counts[apply_behavior(Capability::None, cfg, rng)]++;
        CHECK(counts[BehaviorKind::Tamper] == 0);
        const double fault =
            1.0 - static_cast<double>(counts[BehaviorKind::TimelyForward]) / trials;
        CHECK(fault == Catch::Approx(0.02).margin(0.005));
        CHECK(counts[BehaviorKind::Drop] > 0);
        CHECK(counts[BehaviorKind::Delay] > 0);
    }
}

TEST_CASE("radio energy model") {
    RadioModel r;  // defaults: 50 nJ/bit, 10 pJ/bit/m^2, 0.0013 pJ/bit/m^4

    SECTION("free-space example: 4000 bits over 50 m costs 3.0e-4 J") {
        CHECK(energy_tx(r, 4000, 50) == Catch::Approx(3.0e-4).epsilon(1e-12));
    }
    SECTION("zero distance costs only the electronics") {
        CHECK(energy_tx(r, 4000, 0) == Catch::Approx(4000 * 50e-9).epsilon(1e-12));
        CHECK(energy_rx(r, 4000) == Catch::Approx(4000 * 50e-9).epsilon(1e-12));
    }
    SECTION("the two branches agree at the crossover distance") {
        const double d0 = r.d0();
        CHECK(d0 == Catch::Approx(87.7).margin(0.1));
        const double fs = 4000 * r.e_elec + 4000 * r.eps_fs * d0 * d0;
        const double mp = 4000 * r.e_elec + 4000 * r.eps_mp * d0 * d0 * d0 * d0;
        CHECK(fs == Catch::Approx(mp).epsilon(1e-12));
    }
    SECTION("multipath dominates far away") {
        CHECK(energy_tx(r, 4000, 200) > 10 * energy_tx(r, 4000, 80));
    }
}

TEST_CASE("join_cluster picks the nearest trusted head") {
    const std::vector<HeadCandidate> candidates{{7, 30.0}, {3, 20.0}, {9, 25.0}};

    SECTION("all trusted: nearest wins") {
        auto all = [](int) { return Verdict::Trusted; };
        CHECK(join_cluster(candidates, all, true) == 3);
    }
    SECTION("untrusted heads are skipped even when nearest") {
        auto except3 = [](int id) { return id == 3 ? Verdict::Untrusted : Verdict::Trusted; };
        CHECK(join_cluster(candidates, except3, true) == 9);
    }
    SECTION("uncertain is not good enough to join") {
        auto unc = [](int) { return Verdict::Uncertain; };
        CHECK(join_cluster(candidates, unc, true) == kSelfHead);
        CHECK(join_cluster(candidates, unc, false) == kDirectToBs);
    }
    SECTION("exact distance tie goes to the lower id") {
        const std::vector<HeadCandidate> tied{{8, 15.0}, {2, 15.0}, {5, 15.0}};
        auto all = [](int) { return Verdict::Trusted; };
        CHECK(join_cluster(tied, all, true) == 2);
    }
    SECTION("no candidates at all") {
        auto all = [](int) { return Verdict::Trusted; };
        CHECK(join_cluster({}, all, true) == kSelfHead);
        CHECK(join_cluster({}, all, false) == kDirectToBs);
    }
}

TEST_CASE("spend_energy clamps at zero and reports shortfalls") {
    ScenarioConfig cfg;
    NetworkState st = init_network(cfg);
    Device& d = st.devices[0];
    d.energy = 1.0;
    const double before = st.consumed_energy;

    CHECK(spend_energy(st, d, 0.4));
    CHECK(d.energy == Catch::Approx(0.6).epsilon(1e-12));
    CHECK_FALSE(spend_energy(st, d, 1.0));  // cannot pay in full
    CHECK(d.energy == 0.0);
    CHECK(st.consumed_energy - before == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("init_network lays out roles, dispositions, and energy") {
    ScenarioConfig cfg;
    cfg.malicious_pct = 50.0;
    cfg.seed = 7;
    NetworkState st = init_network(cfg);

    REQUIRE(st.devices.size() == 100);
    int super = 0, advanced = 0, generic = 0, malicious = 0;
    int higher = 0, medium = 0, lower = 0;
    for (const Device& d : st.devices) {
        if (d.role == Role::Super) super++;
        else if (d.role == Role::Advanced) advanced++;
        else generic++;
        if (d.malicious()) malicious++;
        if (d.capability == Capability::Higher) higher++;
        if (d.capability == Capability::Medium) medium++;
        if (d.capability == Capability::Lower) lower++;
        CHECK(d.energy == cfg.initial_energy);
        CHECK(d.alive);
        CHECK(d.x >= 0.0);
        CHECK(d.x <= cfg.field_width);
        CHECK(d.y >= 0.0);
        CHECK(d.y <= cfg.field_height);
    }
    CHECK(super == 30);
    CHECK(advanced == 50);
    CHECK(generic == 20);
    CHECK(malicious == 50);
    CHECK(higher == 15);
    CHECK(medium == 20);
    CHECK(lower == 15);
    CHECK(st.initial_total_energy == Catch::Approx(100 * cfg.initial_energy));
}

TEST_CASE("clean windows evaluate to exactly full trust") {
    ScenarioConfig cfg;
    NetworkState st = init_network(cfg);

    std::deque<BehaviorOutcome> clean;
    for (int i = 0; i < 20; ++i) clean.push_back({BehaviorKind::TimelyForward, i});
    CHECK(window_trust(st, clean) == 1.0);

    // One drop in twenty keeps every per-kind rate at or below the fuzzy Low
    // plateau (0.2), so trust stays pinned at exactly 1.0.
    std::deque<BehaviorOutcome> one_in_twenty = clean;
    one_in_twenty[4] = {BehaviorKind::Drop, 4};
    CHECK(window_trust(st, one_in_twenty) == 1.0);

    // Five of a kind in twenty crosses the plateau: trust dips.
    std::deque<BehaviorOutcome> five_delays = clean;
    for (int i = 0; i < 5; ++i) five_delays[i] = {BehaviorKind::Delay, i};
    CHECK(window_trust(st, five_delays) < 1.0);

    // Short windows amplify: a single bad outcome among three is a 1/3 rate.
    std::deque<BehaviorOutcome> young{{BehaviorKind::TimelyForward, 0},
                                      {BehaviorKind::Drop, 1},
                                      {BehaviorKind::TimelyForward, 2}};
    CHECK(window_trust(st, young) < 1.0);
}

TEST_CASE("a witnessed tamper condemns the forwarder permanently") {
    ScenarioConfig cfg;
    NetworkState st = init_network(cfg);
    st.round = 100;
    Device& observer = st.devices[0];

    record_observation(st, observer, 5, BehaviorKind::Drop);
    CHECK_FALSE(observer.track[5].condemned);
    CHECK(raw_opinion(st, observer, 5).verdict == Verdict::Trusted);

    record_observation(st, observer, 5, BehaviorKind::Tamper);
    CHECK(observer.track[5].condemned);
    RawOpinion op = raw_opinion(st, observer, 5);
    CHECK(op.decided);
    CHECK(op.verdict == Verdict::Untrusted);
    CHECK(verdict_of(st, observer, 5) == Verdict::Untrusted);

    // Twenty clean forwards later the window has no tamper left, but the
    // verdict never softens: there is no redemption path.
    for (int i = 0; i < 20; ++i) record_observation(st, observer, 5, BehaviorKind::TimelyForward);
    CHECK(verdict_of(st, observer, 5) == Verdict::Untrusted);
}

TEST_CASE("tdma charges members per upload and the head per reception") {
    ScenarioConfig cfg;
    cfg.device_count = 3;
    cfg.role_super_pct = 0;
    cfg.role_advanced_pct = 0;
    cfg.role_generic_pct = 100;
    NetworkState st = init_network(cfg);
    st.round = 1;
    Device& head = st.devices[0];
    Device& m1 = st.devices[1];
    Device& m2 = st.devices[2];
    head.is_head = true;
    st.clusters.push_back({0, {1, 2}});

    const double e0_head = head.energy, e0_m1 = m1.energy, e0_m2 = m2.energy;
    phase_tdma(st);

    const RadioModel radio = st.radio();
    CHECK(e0_m1 - m1.energy ==
          Catch::Approx(energy_tx(radio, cfg.packet_bits, device_distance(m1, head))));
    CHECK(e0_m2 - m2.energy ==
          Catch::Approx(energy_tx(radio, cfg.packet_bits, device_distance(m2, head))));
    CHECK(e0_head - head.energy ==
          Catch::Approx(2.0 * energy_rx(radio, cfg.packet_bits)).epsilon(1e-12));
    CHECK(head.packets_held == 2);
    CHECK(st.total_sent == 2);
}

TEST_CASE("simulation runs are deterministic in seed and config") {
    ScenarioConfig cfg = quick_config(30.0, 99, 120);
    NetworkState a = run_scenario_rounds(cfg);
    NetworkState b = run_scenario_rounds(cfg);
    REQUIRE(a.events.size() == b.events.size());
    CHECK(a.events == b.events);
    CHECK(a.total_attacks == b.total_attacks);
    CHECK(a.total_delivered == b.total_delivered);
    CHECK(a.consumed_energy == b.consumed_energy);

    ScenarioConfig other = cfg;
    other.seed = 100;
    NetworkState c = run_scenario_rounds(other);
    CHECK(a.events != c.events);
}

TEST_CASE("round-loop invariants hold on a mixed network") {
    ScenarioConfig cfg = quick_config(30.0, 4242, 250);
    NetworkState st = init_network(cfg);

    std::map<int, int> death_round;
    for (int r = 0; r < cfg.round_budget && alive_count(st) > 0; ++r) {
        run_round(st);

        // Energy conservation, every round.
        double residual = 0.0;
        for (const Device& d : st.devices) residual += d.energy;
        CHECK(st.initial_total_energy - residual ==
              Catch::Approx(st.consumed_energy).epsilon(1e-9));

        // Cluster well-formedness: alive devices partition into heads,
        // members of exactly one cluster, and direct senders.
        std::map<int, int> memberships;
        std::set<int> heads;
        for (const Cluster& c : st.clusters) {
            heads.insert(c.head);
            for (int m : c.members) memberships[m]++;
        }
        for (const Device& d : st.devices) {
            if (!d.alive) continue;
            const bool is_head = heads.count(d.id) > 0;
            const bool is_member = memberships.count(d.id) > 0;
            const bool is_direct = d.direct_bs;
            CHECK((is_head ? 1 : 0) + (is_member ? 1 : 0) + (is_direct ? 1 : 0) == 1);
            if (is_member) CHECK(memberships[d.id] == 1);
        }
    }

    // Dead silence: once a device dies it emits nothing further.
    for (const Event& e : st.events)
        if (e.kind == "death") death_round[e.actor] = e.round;
    for (const Event& e : st.events) {
        if (e.kind == "death" || e.actor < 0) continue;
        auto it = death_round.find(e.actor);
        if (it != death_round.end()) CHECK(e.round <= it->second);
    }

    // Attack arithmetic.
    long long forwards = 0, attacks = 0;
    for (const Event& e : st.events) {
        if (e.kind == "forward") forwards++;
        if (e.kind == "attack") attacks++;
    }
    CHECK(attacks == st.total_attacks);
    CHECK(attacks <= forwards);
    CHECK(st.total_forwards == forwards);
    CHECK(st.total_delivered <= st.total_sent);
}

TEST_CASE("a fully honest network never records an attack") {
    ScenarioConfig cfg = quick_config(0.0, 11, 150);
    NetworkState st = run_scenario_rounds(cfg);
    CHECK(st.total_attacks == 0);
    CHECK(st.last_attack_round == 0);
    for (const Event& e : st.events) CHECK(e.kind != "attack");
    CHECK(st.total_delivered > 0);
}

TEST_CASE("election and self-heading respect the rotation cooldown") {
    ScenarioConfig cfg = quick_config(20.0, 31, 120);
    NetworkState st = run_scenario_rounds(cfg);
    const int period = election_period(cfg.election_p);

    std::map<int, std::vector<int>> head_rounds;
    for (const Event& e : st.events)
        if (e.kind == "elect" || e.kind == "self_head") head_rounds[e.actor].push_back(e.round);
    REQUIRE_FALSE(head_rounds.empty());
    for (const auto& [id, rounds] : head_rounds)
        for (std::size_t i = 1; i < rounds.size(); ++i)
            CHECK(rounds[i] - rounds[i - 1] >= period);
}

TEST_CASE("condemned heads are never joined afterwards") {
    ScenarioConfig cfg = quick_config(40.0, 77, 200);
    NetworkState st = run_scenario_rounds(cfg);

    // Reconstruct when each observer first witnessed a tamper by each head:
    // every alive device in radio range of the forwarding head saw it.
    std::map<int, int> died_at;
    for (const Event& e : st.events)
        if (e.kind == "death") died_at[e.actor] = e.round;
    auto alive_at = [&](int id, int round) {
        auto it = died_at.find(id);
        return it == died_at.end() || round <= it->second;
    };

    std::map<std::pair<int, int>, int> condemned_at;  // (observer, head) -> round
    for (const Event& e : st.events) {
        if (e.kind != "forward" || e.value != "tamper") continue;
        const Device& h = st.devices[static_cast<std::size_t>(e.actor)];
        for (const Device& o : st.devices) {
            if (o.id == h.id || !alive_at(o.id, e.round)) continue;
            if (device_distance(o, h) > cfg.radio_range) continue;
            auto key = std::make_pair(o.id, h.id);
            if (!condemned_at.count(key)) condemned_at[key] = e.round;
        }
    }
    REQUIRE_FALSE(condemned_at.empty());

    for (const Event& e : st.events) {
        if (e.kind != "join") continue;
        auto it = condemned_at.find({e.actor, e.target});
        if (it != condemned_at.end()) CHECK(e.round <= it->second);
    }
}

TEST_CASE("super devices accumulate full-length trust vectors") {
    ScenarioConfig cfg = quick_config(10.0, 5, 60);
    NetworkState st = run_scenario_rounds(cfg);

    bool any = false;
    for (const Device& d : st.devices) {
        if (d.role != Role::Super) continue;
        for (const TrustVector& v : d.collected) {
            any = true;
            REQUIRE(v.values.size() == static_cast<std::size_t>(cfg.vector_len));
            for (double x : v.values) {
                CHECK(x >= 0.0);
                CHECK(x <= 1.0);
            }
        }
        CHECK(d.collected.size() <= static_cast<std::size_t>(cfg.dataset_cap));
    }
    CHECK(any);
}

TEST_CASE("training fires and produces share and recommend traffic") {
    // Small network tuned so the whole pipeline (dataset -> train -> share ->
    // recommend) completes in well under a second: fewer devices, a low
    // training trigger, small batches, and short epochs.
    ScenarioConfig cfg;
    cfg.device_count = 40;
    cfg.malicious_pct = 50.0;
    cfg.seed = 60;
    cfg.round_budget = 90;
    cfg.batch_size = 8;
    cfg.min_training_vectors = 48;
    cfg.epochs_initial = 50;
    cfg.epochs_update = 20;
    NetworkState st = run_scenario_rounds(cfg);

    int trains = 0, shares = 0, recommends = 0;
    for (const Event& e : st.events) {
        if (e.kind == "train") trains++;
        if (e.kind == "share") shares++;
        if (e.kind == "recommend") recommends++;
    }
    CHECK(trains > 0);
    CHECK(shares > 0);
    CHECK(recommends > 0);

    bool some_threshold = false;
    for (const Device& d : st.devices)
        if (d.role == Role::Generic && d.threshold) {
            some_threshold = true;
            CHECK(*d.threshold > 0.0);
            CHECK(*d.threshold <= 1.0);
        }
    CHECK(some_threshold);
    CHECK(st.have_train_stats);
    CHECK_FALSE(st.last_train_stats.epochs.empty());
}
