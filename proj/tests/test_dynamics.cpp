#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>

#include "doctest.h"
#include "oracle.hpp"
#include "trios/dynamics.hpp"

using namespace trios;

namespace {

// Ids in the examples below are 1-based.
constexpr Agent A(int id) { return id - 1; }

StepRecord record_of(std::int64_t t, std::vector<Trio> trios) {
    StepRecord r;
    r.time = t;
    for (std::size_t i = 0; i < trios.size(); ++i) r.choices.push_back({static_cast<Agent>(i), trios[i]});
    return r;
}

double prob_of(const std::vector<TrioProbability>& table, Trio t) {
    for (const auto& e : table) {
        if (e.trio == t) return e.probability;
    }
    FAIL("trio missing from table");
    return -1;
}

PropensityMatrix ones(int n) {
    ModelConfig c;
    c.population_size = n;
    return init_weights(c);
}

}  // namespace

TEST_CASE("init_weights: unit off-diagonal, zero diagonal") {
    const auto w = ones(4);
    CHECK(w.size() == 4);
    CHECK(w.time() == 0);
    for (Agent i = 0; i < 4; ++i) {
        for (Agent j = 0; j < 4; ++j) CHECK(w(i, j) == (i == j ? 0.0 : 1.0));
    }
    CHECK(w(A(2), A(2)) == 0.0);
    CHECK(ones(6).total_weight() == 15.0);
}

TEST_CASE("config validation") {
    ModelConfig c;
    c.population_size = 3;
    CHECK_THROWS_AS(init_weights(c), ConfigError);
    c.population_size = 5;
    c.game = Game::StagHunt;
    CHECK_THROWS_AS(init_weights(c), ConfigError);
    c.population_size = 6;
    CHECK_NOTHROW(init_weights(c));
    for (double x : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
        c.x = x;
        CHECK_THROWS_AS(c.validate(), ConfigError);
    }
    CHECK(parse_rule("chooser_only") == TrioWeightRule::ChooserOnly);
    CHECK(parse_game(to_string(Game::StagHunt)) == Game::StagHunt);
    CHECK_THROWS_AS(parse_rule("cubic"), ConfigError);
}

TEST_CASE("trio_distribution: uniform weights") {
    for (auto rule : {TrioWeightRule::Literal, TrioWeightRule::Symmetrized, TrioWeightRule::ChooserOnly}) {
        const auto table = trio_distribution(ones(4), A(1), rule);
        REQUIRE(table.size() == 3);
        for (const auto& e : table) CHECK(e.probability == doctest::Approx(1.0 / 3).epsilon(1e-15));
    }
}

TEST_CASE("trio_distribution: one heavier pair, N=4") {
    auto w = ones(4);
    w(A(1), A(2)) = w(A(2), A(1)) = 2.0;
    // products 2, 2, 1
    for (auto rule : {TrioWeightRule::Literal, TrioWeightRule::ChooserOnly}) {
        const auto table = trio_distribution(w, A(1), rule);
        CHECK(prob_of(table, make_trio(A(1), A(2), A(3))) == doctest::Approx(0.4).epsilon(1e-14));
        CHECK(prob_of(table, make_trio(A(1), A(2), A(4))) == doctest::Approx(0.4).epsilon(1e-14));
        CHECK(prob_of(table, make_trio(A(1), A(3), A(4))) == doctest::Approx(0.2).epsilon(1e-14));
    }
}

TEST_CASE("trio_distribution: N=5, W(1,2)=3, chooser 3") {
    auto w = ones(5);
    w(A(1), A(2)) = w(A(2), A(1)) = 3.0;
    const auto table = trio_distribution(w, A(3), TrioWeightRule::Literal);
    REQUIRE(table.size() == 6);
    for (const auto& e : table) {
        const double expect = e.trio == make_trio(A(1), A(2), A(3)) ? 3.0 / 8 : 1.0 / 8;
        CHECK(e.probability == doctest::Approx(expect).epsilon(1e-14));
    }
    // Chooser 3 never weighs the pair {1,2} under ChooserOnly.
    for (const auto& e : trio_distribution(w, A(3), TrioWeightRule::ChooserOnly)) {
        CHECK(e.probability == doctest::Approx(1.0 / 6).epsilon(1e-14));
    }
}

TEST_CASE("trio_distribution matches enumeration for every rule") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const int n = 4 + static_cast<int>(seed % 6);
        const auto w = oracle::random_matrix(n, seed, seed % 2 == 0);
        for (auto rule : {TrioWeightRule::Literal, TrioWeightRule::Symmetrized, TrioWeightRule::ChooserOnly}) {
            for (Agent i = 0; i < n; ++i) {
                const auto expect = oracle::distribution(w, i, rule);
                const auto table = trio_distribution(w, i, rule);
                REQUIRE(table.size() == expect.size());
                for (const auto& e : table) {
                    CHECK(contains(e.trio, i));
                    CHECK(e.probability == doctest::Approx(expect.at(e.trio)).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("property: normalization and scale invariance") {
    for (std::uint64_t seed = 100; seed < 160; ++seed) {
        const int n = 4 + static_cast<int>(seed % 8);
        const auto w = oracle::random_matrix(n, seed, seed % 3 == 0, 0.2);
        PropensityMatrix scaled = w;
        const double c = std::exp(static_cast<double>(seed % 13) - 6.0);
        for (double& v : scaled.data()) v *= c;
        for (auto rule : {TrioWeightRule::Literal, TrioWeightRule::Symmetrized, TrioWeightRule::ChooserOnly}) {
            for (Agent i = 0; i < n; ++i) {
                std::vector<TrioProbability> a, b;
                try {
                    a = trio_distribution(w, i, rule);
                } catch (const DegenerateDistribution&) {
                    CHECK_THROWS_AS(trio_distribution(scaled, i, rule), DegenerateDistribution);
                    continue;
                }
                b = trio_distribution(scaled, i, rule);
                double sum = 0.0;
                for (std::size_t k = 0; k < a.size(); ++k) {
                    CHECK(a[k].probability >= 0.0);
                    CHECK(a[k].trio == b[k].trio);
                    CHECK(std::fabs(a[k].probability - b[k].probability) <= 1e-12);
                    sum += a[k].probability;
                }
                CHECK(std::fabs(sum - 1.0) <= 1e-12);
            }
        }
    }
}

TEST_CASE("Literal and Symmetrized agree on symmetric matrices") {
    for (std::uint64_t seed = 7; seed < 17; ++seed) {
        const auto w = oracle::random_matrix(7, seed, true);
        for (Agent i = 0; i < 7; ++i) {
            const auto a = trio_distribution(w, i, TrioWeightRule::Literal);
            const auto b = trio_distribution(w, i, TrioWeightRule::Symmetrized);
            for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].probability == doctest::Approx(b[k].probability));
        }
    }
}

TEST_CASE("degenerate distribution is an error") {
    PropensityMatrix w(4);
    CHECK_THROWS_AS(trio_distribution(w, 0, TrioWeightRule::Literal), DegenerateDistribution);
    Rng rng(1);
    CHECK_THROWS_AS(sample_trios(w, TrioWeightRule::ChooserOnly, rng), DegenerateDistribution);
    w(0, 1) = std::numeric_limits<double>::infinity();
    w(0, 2) = 1.0;
    CHECK_THROWS_AS(sample_trios(w, TrioWeightRule::ChooserOnly, rng), DegenerateDistribution);
}

TEST_CASE("sample_trios: uniform N=4 frequencies") {
    const auto w = ones(4);
    TrioSampler sampler(4, TrioWeightRule::Literal);
    Rng rng(2024);
    std::map<Trio, int> counts;
    const int draws = 300000;
    for (int k = 0; k < draws; ++k) ++counts[sampler.sample_one(w, 0, rng)];
    REQUIRE(counts.size() == 3);
    for (const auto& [t, c] : counts) CHECK(std::fabs(c / double(draws) - 1.0 / 3) < 0.005);
}

TEST_CASE("sample_trios: zero cross weights keep trios inside blocks") {
    auto w = ones(6);
    for (Agent i = 0; i < 3; ++i) {
        for (Agent j = 3; j < 6; ++j) w(i, j) = w(j, i) = 0.0;
    }
    for (auto rule : {TrioWeightRule::Literal, TrioWeightRule::Symmetrized, TrioWeightRule::ChooserOnly}) {
        Rng rng(9);
        for (int k = 0; k < 2000; ++k) {
            const auto rec = sample_trios(w, rule, rng);
            REQUIRE(rec.choices.size() == 6);
            for (const auto& c : rec.choices) {
                CHECK(contains(c.members, c.chooser));
                const bool low = c.members[2] < 3;
                const bool high = c.members[0] >= 3;
                CHECK((low || high));
            }
        }
    }
}

TEST_CASE("sample_trios: same seed, same choices") {
    const auto w = oracle::random_matrix(8, 5, false);
    Rng a(77), b(77), c(78);
    const auto ra = sample_trios(w, TrioWeightRule::ChooserOnly, a);
    const auto rb = sample_trios(w, TrioWeightRule::ChooserOnly, b);
    CHECK(ra == rb);
    bool differs = false;
    for (int k = 0; k < 5 && !differs; ++k) differs = sample_trios(w, TrioWeightRule::ChooserOnly, c) != ra;
    CHECK(differs);
}

TEST_CASE("sampler chi-square against enumeration") {
    // Each (matrix, rule, chooser) is one goodness-of-fit test at p = 0.001.
    const double alpha = 0.001;
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const int n = seed == 13 ? 5 : 4;
        const auto w = oracle::random_matrix(n, seed, false);
        for (auto rule : {TrioWeightRule::Literal, TrioWeightRule::Symmetrized, TrioWeightRule::ChooserOnly}) {
            const auto expect = oracle::distribution(w, 1, rule);
            TrioSampler sampler(n, rule);
            Rng rng(seed * 31 + static_cast<int>(rule));
            std::map<Trio, int> counts;
            const int draws = 100000;
            for (int k = 0; k < draws; ++k) ++counts[sampler.sample_one(w, 1, rng)];
            double stat = 0.0;
            for (const auto& [t, p] : expect) {
                const double e = p * draws;
                const double o = counts.count(t) ? counts[t] : 0;
                stat += (o - e) * (o - e) / e;
            }
            const boost::math::chi_squared dist(static_cast<double>(expect.size() - 1));
            CHECK(stat < boost::math::quantile(boost::math::complement(dist, alpha)));
        }
    }
}

TEST_CASE("reinforce_threes_company examples") {
    SUBCASE("pure decay") {
        const auto w = ones(4);
        const auto rec = record_of(0, {make_trio(0, 2, 3), make_trio(1, 2, 3), make_trio(0, 2, 3), make_trio(1, 2, 3)});
        const auto next = reinforce_threes_company(w, rec, 0.5);
        CHECK(next(A(1), A(2)) == 0.5);
        CHECK(next.time() == 1);
    }
    SUBCASE("four trios cover {1,2}") {
        const Trio t123 = make_trio(A(1), A(2), A(3));
        const auto next =
            reinforce_threes_company(ones(4), record_of(0, {t123, t123, t123, make_trio(A(1), A(2), A(4))}), 0.5);
        CHECK(next(A(1), A(2)) == 4.5);
        CHECK(next(A(2), A(1)) == 4.5);
        CHECK(next(A(3), A(4)) == 0.5);
        CHECK(next.is_symmetric());
    }
    SUBCASE("total after one step from init, N=6") {
        Rng rng(3);
        const auto w = ones(6);
        for (int k = 0; k < 20; ++k) {
            const auto rec = sample_trios(w, TrioWeightRule::ChooserOnly, rng);
            CHECK(reinforce_threes_company(w, rec, 0.5).total_weight() == 25.5);
        }
    }
    SUBCASE("time stamps must match") {
        const Trio t = make_trio(0, 1, 2);
        CHECK_THROWS_AS(reinforce_threes_company(ones(4), record_of(3, {t, t, t, make_trio(1, 2, 3)}), 0.5),
                        std::invalid_argument);
        CHECK_THROWS_AS(reinforce_threes_company(ones(4), record_of(0, {t, t}), 0.5), std::invalid_argument);
    }
}

TEST_CASE("reinforce_stag_hunt examples") {
    const int n = 3;
    const Trio hares = make_trio(A(1), A(2), A(3));
    SUBCASE("all-stag trio pays stags 4 per pair") {
        const Trio stags = make_trio(A(4), A(5), A(6));
        const auto rec = record_of(0, {hares, hares, hares, stags, make_trio(A(5), A(1), A(2)),
                                       make_trio(A(6), A(1), A(3))});
        const auto next = reinforce_stag_hunt(ones(6), rec, 0.5, n);
        CHECK(next(A(4), A(5)) == 4.5);
        CHECK(next(A(4), A(6)) == 4.5);
        CHECK(next(A(1), A(2)) == doctest::Approx(0.5 + 3 * 4));
    }
    SUBCASE("mixed trio pays the hare, not the stag") {
        const Trio mixed = make_trio(0, 3, 4);
        const Trio low = make_trio(0, 1, 2);
        const Trio high = make_trio(3, 4, 5);
        const auto next = reinforce_stag_hunt(ones(6), record_of(0, {mixed, low, low, high, high, high}), 0.5, n);
        CHECK(next(0, 3) == 3.5);
        CHECK(next(3, 0) == 0.5);
        CHECK(next(3, 4) == 12.5);
        CHECK(next(0, 1) == 6.5);
        CHECK(next(1, 0) == 6.5);
    }
    SUBCASE("pure decay and size errors") {
        const auto rec = record_of(0, {hares, hares, hares, make_trio(3, 4, 5), make_trio(3, 4, 5), make_trio(3, 4, 5)});
        const auto next = reinforce_stag_hunt(ones(6), rec, 0.25, n);
        CHECK(next(A(1), A(4)) == 0.75);
        CHECK(next(A(4), A(1)) == 0.75);
        CHECK_THROWS_AS(reinforce_stag_hunt(ones(6), rec, 0.25, 2), std::invalid_argument);
    }
}

TEST_CASE("step: conservation and symmetry for Three's Company") {
    for (double x : {0.1, 0.3, 0.5, 0.9}) {
        for (int n : {4, 6, 9}) {
            ModelConfig cfg;
            cfg.population_size = n;
            cfg.x = x;
            Simulation sim(cfg);
            Rng rng(static_cast<std::uint64_t>(n * 1000 + x * 100));
            double prev = sim.weights().total_weight();
            for (int t = 1; t <= 3000; ++t) {
                sim.step(rng);
                const double total = sim.weights().total_weight();
                CHECK(total == doctest::Approx((1 - x) * prev + 3 * n).epsilon(1e-12));
                const double closed = 3.0 * n / x + (n * (n - 1) / 2.0 - 3.0 * n / x) * std::pow(1 - x, t);
                CHECK(std::fabs(total - closed) <= 1e-9 * closed);
                prev = total;
            }
            CHECK(sim.weights().is_symmetric());
            for (Agent i = 0; i < n; ++i) CHECK(sim.weights()(i, i) == 0.0);
        }
    }
}

TEST_CASE("step: lower bound after selection") {
    ModelConfig cfg;
    cfg.population_size = 6;
    cfg.x = 0.4;
    Simulation sim(cfg);
    Rng rng(8);
    std::vector<std::int64_t> last(36, -1);
    for (int t = 0; t < 2000; ++t) {
        const auto& rec = sim.step(rng);
        for (const auto& c : rec.choices) {
            const auto& m = c.members;
            last[m[0] * 6 + m[1]] = last[m[0] * 6 + m[2]] = last[m[1] * 6 + m[2]] = t;
        }
        for (Agent a = 0; a < 6; ++a) {
            for (Agent b = a + 1; b < 6; ++b) {
                const auto s = last[a * 6 + b];
                if (s < 0) continue;
                // covered at step s, so W(t+1) >= (1-x)^(t-s)
                CHECK(sim.weights()(a, b) >= std::pow(1 - cfg.x, t - s) * (1 - 1e-12));
            }
        }
    }
}

TEST_CASE("step: stag-to-hare entries decay geometrically") {
    for (auto rule : {TrioWeightRule::ChooserOnly, TrioWeightRule::Symmetrized}) {
        ModelConfig cfg;
        cfg.population_size = 8;
        cfg.x = 0.3;
        cfg.game = Game::StagHunt;
        cfg.rule = rule;
        Simulation sim(cfg);
        Rng rng(4);
        double expect = 1.0;
        for (int t = 1; t <= 200; ++t) {
            sim.step(rng);
            expect *= 1 - cfg.x;
            for (Agent s = 4; s < 8; ++s) {
                for (Agent h = 0; h < 4; ++h) CHECK(sim.weights()(s, h) == expect);
            }
        }
        CHECK(expect == doctest::Approx(std::pow(0.7, 200)).epsilon(1e-12));
    }
}

TEST_CASE("free step matches Simulation") {
    ModelConfig cfg;
    cfg.population_size = 6;
    cfg.game = Game::StagHunt;
    SimulationState state{cfg, init_weights(cfg)};
    Simulation sim(cfg);
    Rng a(5), b(5);
    for (int t = 0; t < 50; ++t) {
        auto [next, rec] = step(state, a);
        CHECK(rec == sim.step(b));
        state = std::move(next);
        CHECK(state.weights == sim.weights());
    }
}

TEST_CASE("cross_group_choice_probability") {
    SUBCASE("zero cross weights") {
        auto w = ones(6);
        for (Agent i = 0; i < 3; ++i) {
            for (Agent j = 3; j < 6; ++j) w(i, j) = w(j, i) = 0.0;
        }
        const std::vector<Agent> g{0, 1, 2};
        for (auto rule : {TrioWeightRule::Literal, TrioWeightRule::ChooserOnly}) {
            CHECK(cross_group_choice_probability(w, g, 0, rule) == 0.0);
        }
    }
    SUBCASE("uniform N=4") {
        const std::vector<Agent> g{0, 1, 2};
        CHECK(cross_group_choice_probability(ones(4), g, 0, TrioWeightRule::Literal) ==
              doctest::Approx(2.0 / 3).epsilon(1e-14));
        CHECK_THROWS_AS(cross_group_choice_probability(ones(4), g, 3, TrioWeightRule::Literal),
                        std::invalid_argument);
    }
    SUBCASE("stags with strong mutual weights") {
        auto w = ones(6);
        for (Agent i = 3; i < 6; ++i) {
            for (Agent j = 3; j < 6; ++j) {
                if (i != j) w(i, j) = 10.0;
            }
        }
        const std::vector<Agent> stags{3, 4, 5};
        // 1000 all-stag, six mixed at 10, three double-hare at 1
        CHECK(cross_group_choice_probability(w, stags, 3, TrioWeightRule::Literal) ==
              doctest::Approx(63.0 / 1063).epsilon(1e-13));
        // chooser-only: 100, six at 10, three at 1
        CHECK(cross_group_choice_probability(w, stags, 3, TrioWeightRule::ChooserOnly) ==
              doctest::Approx(63.0 / 163).epsilon(1e-13));
    }
}
