#include <gtest/gtest.h>

#include <filesystem>

#include "test_util.hpp"

using namespace etpareto;
using namespace etpareto::testing;

namespace {

// Layout used by the hand fixtures: states 0..nt-1, then coll, tar, free.
constexpr std::size_t C(std::size_t nt) { return nt; }
constexpr std::size_t T(std::size_t nt) { return nt + 1; }
constexpr std::size_t F(std::size_t nt) { return nt + 2; }

// Two waypoints, action 0 safe and expensive, action 1 risky and cheap.
MOMDP safe_vs_risky() {
  return make_mdp(2, 2,
                  {{0, 0, 10, {{1, 1.0}}},
                   {0, 1, 2, {{1, 0.8}, {C(2), 0.2}}},
                   {1, 0, 10, {{T(2), 1.0}}},
                   {1, 1, 2, {{T(2), 0.7}, {C(2), 0.2}, {F(2), 0.1}}}});
}

double scalarized(const ObjectivePoint& p, const Weights& w) { return w[0] * p.p_tar - w[1] * p.p_coll - w[2] * p.e_c; }

}  // namespace

TEST(Evaluate, DeterministicChain) {
  const MOMDP m = make_mdp(1, 1, {{0, 0, 5, {{T(1), 1.0}}}});
  const ObjectivePoint p = evaluate_policy(m, pure_policy(m, {0, 0, 0, 0}));
  EXPECT_EQ(p.p_tar, 1.0);
  EXPECT_EQ(p.p_coll, 0.0);
  EXPECT_EQ(p.e_c, 5.0);
}

TEST(Evaluate, SplitChain) {
  const MOMDP m = make_mdp(1, 1, {{0, 0, 3, {{T(1), 0.9}, {C(1), 0.1}}}});
  const ObjectivePoint p = evaluate_policy(m, pure_policy(m, {0, 0, 0, 0}));
  EXPECT_DOUBLE_EQ(p.p_tar, 0.9);
  EXPECT_DOUBLE_EQ(p.p_coll, 0.1);
  EXPECT_DOUBLE_EQ(p.e_c, 3.0);
}

TEST(Evaluate, HandComputedPolicies) {
  const MOMDP m = safe_vs_risky();
  const ObjectivePoint rr = evaluate_policy(m, pure_policy(m, {1, 1, 0, 0, 0}));
  EXPECT_NEAR(rr.p_tar, 0.8 * 0.7, 1e-15);
  EXPECT_NEAR(rr.p_coll, 0.2 + 0.8 * 0.2, 1e-15);
  EXPECT_NEAR(rr.e_c, 2 + 0.8 * 2, 1e-15);
}

TEST(Evaluate, UndefinedReachableStateIsAnError) {
  const MOMDP m = safe_vs_risky();
  Policy p = pure_policy(m, {0, 0, 0, 0, 0});
  p[1].clear();
  EXPECT_THROW(evaluate_policy(m, p), InputError);
  // an unreachable hole is fine
  const MOMDP skip = make_mdp(2, 1, {{0, 0, 1, {{T(2), 1.0}}}, {1, 0, 1, {{T(2), 1.0}}}});
  Policy q = pure_policy(skip, {0, 0, 0, 0, 0});
  q[1].clear();
  EXPECT_NO_THROW(evaluate_policy(skip, q));
}

TEST(Evaluate, MixtureIsLinear) {
  const MOMDP m = random_layered_mdp(3, 3, 2, 3);
  const auto all = all_pure_policies(m);
  RngStream rng(1);
  for (int t = 0; t < 50; ++t) {
    const Policy& a = all[rng.below(all.size())];
    const Policy& b = all[rng.below(all.size())];
    const double alpha = rng.uniform();
    const ObjectivePoint pa = evaluate_policy(m, a), pb = evaluate_policy(m, b);
    const ObjectivePoint mix = evaluate_strategy(m, Strategy{a, b, alpha});
    EXPECT_NEAR(mix.p_tar, alpha * pa.p_tar + (1 - alpha) * pb.p_tar, 1e-12);
    EXPECT_NEAR(mix.p_coll, alpha * pa.p_coll + (1 - alpha) * pb.p_coll, 1e-12);
    EXPECT_NEAR(mix.e_c, alpha * pa.e_c + (1 - alpha) * pb.e_c, 1e-12);
  }
}

TEST(Scalarized, MaxTargetBeatsEveryPurePolicy) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MOMDP m = random_layered_mdp(seed, 3, 2, 2);
    const ScalarizedResult r = scalarized_value_iteration(m, {1, 0, 0});
    for (const Policy& p : all_pure_policies(m)) EXPECT_GE(r.point.p_tar + 1e-12, evaluate_policy(m, p).p_tar);
  }
}

TEST(Scalarized, OptimumMatchesEnumeration) {
  RngStream rng(77);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MOMDP m = random_layered_mdp(seed, 3, 2, 3);
    const auto all = all_pure_policies(m);
    for (int t = 0; t < 5; ++t) {
      const Weights w{rng.uniform(), rng.uniform(), 0.05 * rng.uniform()};
      const ScalarizedResult r = scalarized_value_iteration(m, w);
      double best = -1e300;
      for (const Policy& p : all) best = std::max(best, scalarized(evaluate_policy(m, p), w));
      EXPECT_NEAR(r.value, best, 1e-12);
      EXPECT_NEAR(scalarized(r.point, w), best, 1e-12);
    }
  }
}

TEST(Scalarized, EnergyOnlyOnNoiselessPicksLargestThreshold) {
  // larger thresholds never transmit more on the noiseless line
  const MOMDP m = make_mdp(1, 3, {{0, 0, 7, {{T(1), 1.0}}}, {0, 1, 3, {{T(1), 1.0}}}, {0, 2, 0, {{T(1), 1.0}}}});
  const ScalarizedResult r = scalarized_value_iteration(m, {0, 0, 1});
  EXPECT_EQ(pure_actions(r.policy)[0], 2u);
}

TEST(Scalarized, ScaleInvariantAndValidated) {
  const MOMDP m = random_layered_mdp(9, 3, 2, 3);
  const Weights w{0.3, 0.5, 0.01};
  EXPECT_EQ(pure_actions(scalarized_value_iteration(m, w).policy),
            pure_actions(scalarized_value_iteration(m, {3, 5, 0.1}).policy));
  EXPECT_THROW(scalarized_value_iteration(m, {-1, 0, 0}), InputError);
  EXPECT_THROW(scalarized_value_iteration(m, {0, 0, 0}), InputError);
}

TEST(Scalarized, TiesGoToSmallestIndex) {
  const MOMDP m = make_mdp(1, 2, {{0, 0, 1, {{T(1), 1.0}}}, {0, 1, 1, {{T(1), 1.0}}}});
  EXPECT_EQ(pure_actions(scalarized_value_iteration(m, {1, 1, 1}).policy)[0], 0u);
}

TEST(ParetoFront, SingleActionHasOneVertex) {
  const MOMDP m = make_mdp(2, 1, {{0, 0, 1, {{1, 0.9}, {C(2), 0.1}}}, {1, 0, 1, {{T(2), 1.0}}}});
  EXPECT_EQ(pareto_front(m, 10).vertices.size(), 1u);
  EXPECT_THROW(pareto_front(m, 1), InputError);
}

TEST(ParetoFront, DominatingActionGivesOneVertex) {
  const MOMDP m = make_mdp(1, 2, {{0, 0, 1, {{T(1), 0.9}, {C(1), 0.1}}}, {0, 1, 2, {{T(1), 0.8}, {C(1), 0.2}}}});
  const ParetoFront f = pareto_front(m, 10);
  ASSERT_EQ(f.vertices.size(), 1u);
  EXPECT_EQ(pure_actions(f.vertices[0].policy)[0], 0u);
}

TEST(ParetoFront, SafeVersusRisky) {
  const ParetoFront f = pareto_front(safe_vs_risky(), 40);
  ASSERT_GE(f.vertices.size(), 2u);
  for (std::size_t i = 1; i < f.vertices.size(); ++i) {
    EXPECT_GE(f.vertices[i - 1].point.p_tar, f.vertices[i].point.p_tar);
    EXPECT_GT(f.vertices[i - 1].point.e_c, f.vertices[i].point.e_c);
  }
  EXPECT_EQ(f.vertices.front().point.p_tar, 1.0);
  EXPECT_EQ(f.vertices.front().point.e_c, 20.0);
}

TEST(ParetoFront, MatchesBruteForceOnEnumerableFixtures) {
  std::size_t fixtures = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed)
    for (auto [layers, width, actions] : {std::tuple{3u, 2u, 2u}, std::tuple{3u, 2u, 3u}, std::tuple{2u, 3u, 3u},
                                          std::tuple{2u, 5u, 2u}}) {
      const MOMDP m = random_layered_mdp(seed * 7 + layers, layers, width, actions);
      ASSERT_LE(m.non_terminal_count(), 6u);
      ++fixtures;
      std::vector<ObjectivePoint> pts;
      for (const Policy& p : all_pure_policies(m)) pts.push_back(evaluate_policy(m, p));
      const ParetoFront f = pareto_front(m, 40);
      ASSERT_FALSE(f.vertices.empty());
      for (const auto& v : f.vertices) {
        // achieved by some pure policy, dominated by none
        EXPECT_TRUE(std::any_of(pts.begin(), pts.end(), [&](const ObjectivePoint& p) { return same_point(p, v.point, 1e-9); }));
        for (const auto& p : pts) EXPECT_FALSE(dominates(p, v.point, 1e-9));
        EXPECT_TRUE(same_point(evaluate_policy(m, v.policy), v.point, 1e-12));
      }
      for (std::size_t i = 0; i < f.vertices.size(); ++i)
        for (std::size_t j = 0; j < f.vertices.size(); ++j)
          if (i != j) {
            EXPECT_FALSE(dominates(f.vertices[i].point, f.vertices[j].point));
          }
      // every grid weight's enumerated optimum is attained on the front
      for (const Weights& w : simplex_grid(40)) {
        double best = -1e300, on_front = -1e300;
        for (const auto& p : pts) best = std::max(best, scalarized(p, w));
        for (const auto& v : f.vertices) on_front = std::max(on_front, scalarized(v.point, w));
        // the sweep nudges weights by 1e-9, which can cost that much times the objective range
        EXPECT_NEAR(on_front, best, 1e-6);
      }
    }
  EXPECT_EQ(fixtures, 160u);
}

TEST(ParetoFront, SortedAndDeterministic) {
  const MOMDP m = random_layered_mdp(5, 3, 2, 3);
  const ParetoFront a = pareto_front(m, 30), b = pareto_front(m, 30);
  EXPECT_EQ(front_csv(a), front_csv(b));
  for (std::size_t i = 1; i < a.vertices.size(); ++i) EXPECT_GE(a.vertices[i - 1].point.p_tar, a.vertices[i].point.p_tar);
}

TEST(SelectPoint, Queries) {
  const ParetoFront f = pareto_front(safe_vs_risky(), 40);
  const Selection top = select_point(f, MaxPtar{});
  EXPECT_EQ(top.primary_vertex, 0u);
  EXPECT_FALSE(top.secondary_vertex);

  const double p1 = f.vertices[1].point.p_tar;
  const Selection exact = select_point(f, MinEnergyGivenPtar{p1});
  EXPECT_EQ(exact.primary_vertex, 1u);
  EXPECT_FALSE(exact.strategy.secondary);

  const double p0 = f.vertices[0].point.p_tar;
  const double mid = 0.5 * (p0 + p1);
  const Selection s = select_point(f, MinEnergyGivenPtar{mid});
  ASSERT_TRUE(s.strategy.secondary);
  EXPECT_NEAR(s.predicted.p_tar, mid, 1e-12);
  const ObjectivePoint check = evaluate_strategy(safe_vs_risky(), s.strategy);
  EXPECT_NEAR(check.p_tar, mid, 1e-12);
  EXPECT_NEAR(check.e_c, s.predicted.e_c, 1e-12);
  EXPECT_NEAR(s.predicted.e_c, s.alpha * f.vertices[s.primary_vertex].point.e_c +
                                   (1 - s.alpha) * f.vertices[*s.secondary_vertex].point.e_c, 1e-12);
}

TEST(SelectPoint, Infeasible) {
  const ParetoFront f = pareto_front(safe_vs_risky(), 40);
  try {
    select_point(f, MinEnergyGivenPtar{1.01});
    FAIL();
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.achievable_bound(), 1.0);
  }
  EXPECT_THROW(select_point(f, MinCollGivenEnergy{-1.0}), InfeasibleError);
  EXPECT_THROW(select_point(ParetoFront{}, MaxPtar{}), InputError);
}

TEST(SelectPoint, MinCollisionGivenEnergy) {
  const MOMDP m = safe_vs_risky();
  const ParetoFront f = pareto_front(m, 40);
  const double budget = 0.5 * (f.vertices.front().point.e_c + f.vertices.back().point.e_c);
  const Selection s = select_point(f, MinCollGivenEnergy{budget});
  EXPECT_LE(s.predicted.e_c, budget + 1e-12);
  EXPECT_NEAR(evaluate_strategy(m, s.strategy).p_coll, s.predicted.p_coll, 1e-12);
}

TEST(Serialization, FrontAndStrategyRoundTrip) {
  const MOMDP m = random_layered_mdp(4, 3, 2, 3);
  const ParetoFront f = pareto_front(m, 20);
  const ParetoFront g = front_from_json(front_to_json(f, m));
  EXPECT_EQ(front_csv(f), front_csv(g));
  const Selection s = select_point(f, MinEnergyGivenPtar{0.5 * (f.vertices.front().point.p_tar + f.vertices.back().point.p_tar)});
  const Strategy back = strategy_from_json(strategy_to_json(s.strategy), m.size());
  EXPECT_TRUE(same_point(evaluate_strategy(m, back), s.predicted, 1e-12));
  EXPECT_EQ(front_csv(f).substr(0, 36), "p_tar,p_coll,e_c,w1,w2,w3,strategy_i");
}

TEST(Prism, TwoStateChain) {
  const MOMDP m = make_mdp(1, 1, {{0, 0, 5, {{T(1), 1.0}}}});
  const std::string text = export_prism(m);
  EXPECT_NE(text.find("mdp"), std::string::npos);
  EXPECT_NE(text.find("label \"target\""), std::string::npos);
  EXPECT_NE(text.find("label \"collision\""), std::string::npos);
  EXPECT_NE(text.find("rewards \"energy\""), std::string::npos);
  std::size_t commands = 0;
  for (std::size_t pos = 0; (pos = text.find(" -> ", pos)) != std::string::npos; ++pos) ++commands;
  EXPECT_EQ(commands, 1u);
}

TEST(Prism, RoundTrip) {
  const MOMDP m = random_layered_mdp(12, 3, 2, 3);
  const std::string text = export_prism(m);
  const MOMDP back = import_prism(text);
  ASSERT_EQ(back.size(), m.size());
  EXPECT_EQ(back.initial, m.initial);
  EXPECT_EQ(back.s_tar, m.s_tar);
  EXPECT_EQ(back.s_coll, m.s_coll);
  for (std::size_t s = 0; s < m.size(); ++s) {
    ASSERT_EQ(back.states[s].actions.size(), m.states[s].actions.size());
    for (std::size_t k = 0; k < m.states[s].actions.size(); ++k) {
      const auto& a = m.states[s].actions[k];
      const auto& b = back.states[s].actions[k];
      EXPECT_EQ(a.action, b.action);
      EXPECT_NEAR(a.cost, b.cost, 1e-12);
      ASSERT_EQ(a.successors.size(), b.successors.size());
      for (std::size_t i = 0; i < a.successors.size(); ++i) {
        EXPECT_EQ(a.successors[i].state, b.successors[i].state);
        EXPECT_NEAR(a.successors[i].prob, b.successors[i].prob, 1e-12);
      }
    }
  }
  EXPECT_EQ(export_prism(m), export_prism(back));
}

TEST(Prism, WritesFile) {
  const MOMDP m = safe_vs_risky();
  const auto path = std::filesystem::temp_directory_path() / "etpareto_test.prism";
  export_prism(m, path.string());
  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::filesystem::remove(path);
  EXPECT_EQ(text, export_prism(m));
}
