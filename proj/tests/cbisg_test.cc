//
// Copyright 2026 The Fairproxy Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "fairproxy/cbisg.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fairproxy/bisg.h"
#include "fairproxy/simulator.h"
#include "test_util.h"

namespace fairproxy {
namespace {

const std::vector<double> kPrior = {5, 3, 2};
const std::vector<double> kObserved = {2, 3, 1};

TEST(FitPosteriorTest, ConjugatePosteriorExample) {
  const DirichletParams p = FitPosterior(kPrior, kObserved, 0.25);
  EXPECT_EQ(p.alpha, (std::vector<double>{3.25, 3.75, 1.5}));
}

TEST(FitPosteriorTest, NoObservationsKeepsScaledPrior) {
  for (double eta : {0.1, 0.5, 1.0}) {
    const DirichletParams p =
        FitPosterior(kPrior, std::vector<double>{0, 0, 0}, eta);
    for (std::size_t r = 0; r < 3; ++r) {
      EXPECT_DOUBLE_EQ(p.alpha[r], eta * kPrior[r]);
    }
  }
}

TEST(FitPosteriorTest, ZeroEtaUsesObservationsWithFloor) {
  EXPECT_EQ(FitPosterior(kPrior, kObserved, 0.0).alpha,
            (std::vector<double>{2, 3, 1}));
  EXPECT_EQ(FitPosterior(kPrior, std::vector<double>{4, 0, 1}, 0.0).alpha,
            (std::vector<double>{4, kAlphaFloor, 1}));
}

TEST(FitPosteriorTest, RejectsBadArguments) {
  EXPECT_THROW(FitPosterior(kPrior, kObserved, 1.5), Error);
  EXPECT_THROW(FitPosterior(kPrior, kObserved, -0.1), Error);
  EXPECT_THROW(FitPosterior(kPrior, std::vector<double>{1, 2}, 0.5), Error);
  EXPECT_THROW(FitPosterior(kPrior, std::vector<double>{1, -2, 0}, 0.5),
               Error);
}

TEST(FitPosteriorTest, SequentialUpdateEqualsBatch) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> count(0, 20);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> census(4), n1(4), n2(4), both(4);
    for (int r = 0; r < 4; ++r) {
      census[r] = count(rng) + 1;
      n1[r] = count(rng);
      n2[r] = count(rng) + 1;
      both[r] = n1[r] + n2[r];
    }
    const double eta = unit(rng);
    const DirichletParams batch = FitPosterior(census, both, eta);
    const DirichletParams staged =
        UpdatePosterior(FitPosterior(census, n1, eta), n2);
    for (int r = 0; r < 4; ++r) {
      EXPECT_NEAR(batch.alpha[r], staged.alpha[r], 1e-12);
    }
  }
}

TEST(FitPosteriorTest, PriorInfluenceIsMonotone) {
  const std::vector<double> census = {60, 30, 10};
  const std::vector<double> observed = {1, 4, 5};
  std::vector<double> previous = PosteriorMean(
      FitPosterior(census, observed, 0.0)).vector();
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_NEAR(previous[r], observed[r] / 10.0, 1e-12);
  }
  for (int step = 1; step <= 20; ++step) {
    const std::vector<double> current =
        PosteriorMean(FitPosterior(census, observed, step / 20.0)).vector();
    for (std::size_t r = 0; r < 3; ++r) {
      const double target = census[r] / 100.0;
      // Each coordinate moves toward the census share without overshooting.
      EXPECT_LE(std::abs(current[r] - target),
                std::abs(previous[r] - target) + 1e-15);
    }
    previous = current;
  }
}

TEST(PosteriorTest, MeanOfExamplePosterior) {
  const RaceDistribution mean =
      PosteriorMean(DirichletParams{{3.25, 3.75, 1.5}});
  EXPECT_NEAR(mean[0], 0.3824, 5e-5);
  EXPECT_NEAR(mean[1], 0.4412, 5e-5);
  EXPECT_NEAR(mean[2], 0.1765, 5e-5);
  const RaceDistribution uniform = PosteriorMean(DirichletParams{{7, 7, 7}});
  for (double p : uniform.probs()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
}

TEST(PosteriorTest, SampleMeanApproachesAnalyticMean) {
  const DirichletParams params{{3.25, 3.75, 1.5}};
  std::mt19937_64 rng(2024);
  std::vector<double> sum(3, 0.0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const RaceDistribution d = SamplePosterior(params, rng);
    for (int r = 0; r < 3; ++r) sum[r] += d[r];
  }
  for (double& s : sum) s /= draws;
  EXPECT_LE(L1Distance(sum, PosteriorMean(params).vector()), 0.01);
}

TEST(PosteriorTest, TinyAlphasStillSampleAValidDistribution) {
  std::mt19937_64 rng(1);
  const DirichletParams params{{kAlphaFloor, kAlphaFloor, kAlphaFloor}};
  for (int i = 0; i < 100; ++i) {
    EXPECT_TRUE(IsValidDistribution(SamplePosterior(params, rng).probs()));
  }
}

TEST(EtaGridTest, DefaultGridHasElevenPoints) {
  const std::vector<double> grid = DefaultEtaGrid();
  ASSERT_EQ(grid.size(), 11u);
  for (int i = 0; i <= 10; ++i) EXPECT_NEAR(grid[i], i / 10.0, 1e-15);
  EXPECT_EQ(ParseEtaGrid("0:1:0.1"), grid);
  EXPECT_EQ(ParseEtaGrid("0.5:0.5:0.1"), std::vector<double>{0.5});
  EXPECT_THROW(ParseEtaGrid("0:1"), Error);
  EXPECT_THROW(ParseEtaGrid("0:2:0.5"), Error);
  EXPECT_THROW(ParseEtaGrid("0:1:0"), Error);
}

struct SmallWorld {
  RaceSet races{"a", "b"};
  SurnameTable surnames{races};
  GeoTable geos{races};
};

SmallWorld MakeWorld() {
  SmallWorld world;
  world.surnames = ParseSurnameTable("surname,a,b\nLEE,20,10\nKIM,80,90\n",
                                     world.races);
  world.geos = ParseGeoTable("geo_id,a,b\ng1,50,50\ng2,90,10\n", world.races);
  return world;
}

TEST(CbisgPredictTest, ForcedArithmeticAndFallback) {
  const SmallWorld world = MakeWorld();
  std::map<CellKey, DirichletParams> cells;
  cells[{"g1", 1}] = DirichletParams{{4, 4}};
  const CbisgModel model(world.surnames, cells, {{"g1", 0.0}});
  const RaceDistribution d = model.Predict("LEE", "g1", 1);
  EXPECT_NEAR(d[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(d[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(model.Predict("", "g1", 1), model.RaceGivenGeoContext("g1", 1));
  EXPECT_EQ(model.Predict("NOBODY", "g1", 1), model.RaceGivenGeoContext("g1", 1));
  try {
    model.Predict("LEE", "g1", 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnfittedContext);
  }
  try {
    model.Predict("LEE", "g9", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownGeo);
  }
}

TEST(CbisgFitTest, FitsEveryGeoAndContext) {
  const SmallWorld world = MakeWorld();
  const SupplementalDataset train = ParseSupplemental(
      "id,surname,geo,y,race\n1,LEE,g1,1,a\n2,KIM,g1,1,b\n3,KIM,g1,0,b\n",
      world.races);
  CbisgFitConfig config;
  config.eta = 0.5;
  const CbisgModel model = FitCbisg(world.geos, world.surnames, train, config);
  EXPECT_EQ(model.cells().size(), 4u);
  EXPECT_EQ(model.Posterior("g1", 1).alpha, (std::vector<double>{26, 26}));
  EXPECT_EQ(model.Posterior("g1", 0).alpha, (std::vector<double>{25, 26}));
  EXPECT_EQ(model.Posterior("g2", 1).alpha, (std::vector<double>{45, 5}));
  EXPECT_EQ(model.eta("g2"), 0.5);
}

TEST(CbisgFitTest, RejectsUnlabeledAndUnknownGeo) {
  const SmallWorld world = MakeWorld();
  CbisgFitConfig config;
  EXPECT_THROW(FitCbisg(world.geos, world.surnames,
                        ParseSupplemental("id,surname,geo,y,race\n1,LEE,g1,1,\n",
                                          world.races),
                        config),
               Error);
  EXPECT_THROW(FitCbisg(world.geos, world.surnames,
                        ParseSupplemental("id,surname,geo,y,race\n1,LEE,g7,1,a\n",
                                          world.races),
                        config),
               Error);
}

TEST(CbisgSerializeTest, RoundTripPreservesPosteriorsAndEtas) {
  const SmallWorld world = MakeWorld();
  const SupplementalDataset train = ParseSupplemental(
      "id,surname,geo,y,race\n1,LEE,g1,1,a\n2,KIM,g2,0,b\n", world.races);
  CbisgFitConfig config;
  config.eta = 0.3;
  const CbisgModel model = FitCbisg(world.geos, world.surnames, train, config);
  const std::string text = SerializeCbisg(model);
  const CbisgModel again = ParseCbisg(text, world.surnames);
  EXPECT_EQ(SerializeCbisg(again), text);
  for (const auto& [geo, y] : model.cells()) {
    EXPECT_EQ(again.Posterior(geo, y).alpha, model.Posterior(geo, y).alpha);
  }
}

TEST(CbisgSampleModeTest, SeededAndDistinctFromMean) {
  const SmallWorld world = MakeWorld();
  std::map<CellKey, DirichletParams> cells;
  cells[{"g1", 0}] = DirichletParams{{2, 3}};
  cells[{"g1", 1}] = DirichletParams{{2, 3}};
  const CbisgModel a(world.surnames, cells, {{"g1", 0.0}},
                     PointEstimate::kPosteriorSample, 9);
  const CbisgModel b(world.surnames, cells, {{"g1", 0.0}},
                     PointEstimate::kPosteriorSample, 9);
  const CbisgModel c(world.surnames, cells, {{"g1", 0.0}},
                     PointEstimate::kPosteriorSample, 10);
  EXPECT_EQ(a.RaceGivenGeoContext("g1", 1), b.RaceGivenGeoContext("g1", 1));
  EXPECT_NE(a.RaceGivenGeoContext("g1", 1), c.RaceGivenGeoContext("g1", 1));
  EXPECT_NE(a.RaceGivenGeoContext("g1", 1),
            PosteriorMean(cells[{"g1", 1}]));
}

TEST(TuneEtaTest, MatchingProportionsTieToZero) {
  // Training proportions equal census proportions at both contexts: every
  // eta yields the same posterior mean, so the tie-break picks 0.
  const RaceSet races{"a", "b"};
  const SurnameTable surnames = ParseSurnameTable("surname,a,b\n", races);
  const GeoTable geos = ParseGeoTable("geo_id,a,b\ng1,60,40\n", races);
  std::string text = "id,surname,geo,y,race\n";
  int id = 0;
  for (int y = 0; y < 2; ++y) {
    for (int i = 0; i < 3; ++i) text += std::to_string(id++) + ",,g1," + std::to_string(y) + ",a\n";
    for (int i = 0; i < 2; ++i) text += std::to_string(id++) + ",,g1," + std::to_string(y) + ",b\n";
  }
  const SupplementalDataset train = ParseSupplemental(text, races);
  const EtaTuningResult result =
      TuneEta(geos, surnames, "g1", train, EtaTuningConfig{});
  EXPECT_EQ(result.eta, 0.0);
  EXPECT_FALSE(result.used_default);
  for (double e : result.errors) EXPECT_NEAR(e, result.errors[0], 1e-12);
}

TEST(TuneEtaTest, NoTrainingDataUsesDefault) {
  const SmallWorld world = MakeWorld();
  EtaTuningConfig config;
  config.default_eta = 0.4;
  const EtaTuningResult result = TuneEta(
      world.geos, world.surnames, "g2",
      ParseSupplemental("id,surname,geo,y,race\n1,LEE,g1,1,a\n", world.races),
      config);
  EXPECT_TRUE(result.used_default);
  EXPECT_EQ(result.eta, 0.4);
}

// Brute-force oracle: estimator error at every grid point, computed with
// an independently assembled posterior for the geography.
double GridPointError(const GeoTable& geos, const SurnameTable& surnames,
                      const std::string& geo, const SupplementalDataset& train,
                      double eta) {
  std::vector<AttributedRecord> in_geo;
  for (const auto& record : train.records) {
    if (record.geo == geo) in_geo.push_back(record);
  }
  SupplementalDataset subset;
  subset.records = in_geo;
  const std::size_t k = geos.races().size();
  std::map<CellKey, DirichletParams> cells;
  for (int y = 0; y < 2; ++y) {
    cells[{geo, y}] = FitPosterior(geos.counts(geo),
                                   GroupCounts(subset, k, geo, y), eta);
  }
  const CbisgModel model(surnames, cells, {{geo, eta}});
  const ContextualPredictions preds = EvaluateBothContexts(model, in_geo);
  const std::vector<int> outcomes = Outcomes(in_geo);
  double total = 0.0;
  int present = 0;
  for (std::size_t r = 0; r < k; ++r) {
    bool any = false;
    for (const auto& record : in_geo) any |= *record.race == r;
    if (!any) continue;
    ++present;
    total += std::abs(BayesEstimate(preds, outcomes, r) -
                      TruePositiveRate(in_geo, r));
  }
  return total / present;
}

TEST(TuneEtaTest, SelectsExhaustiveGridMinimizer) {
  RandomDgpOptions options;
  options.num_geos = 4;
  options.num_surnames = 15;
  options.race_effect = 0.4;
  const JointTable table = BuildJoint(RandomDgp(options, 77));
  const CensusTables census = ExactCensusTables(table, 1e4, true);
  const SupplementalDataset train = SamplePopulation(table, 400, 5);
  for (const auto& geo : census.geos.geos()) {
    const EtaTuningResult result =
        TuneEta(census.geos, census.surnames, geo, train, EtaTuningConfig{});
    if (result.used_default) continue;
    double best = 1e300;
    double best_eta = -1.0;
    for (double eta : DefaultEtaGrid()) {
      const double error =
          GridPointError(census.geos, census.surnames, geo, train, eta);
      if (error < best - 1e-12) {
        best = error;
        best_eta = eta;
      }
    }
    EXPECT_EQ(result.eta, best_eta) << geo;
  }
}

// `per_cell` labeled records for every (g, y), races drawn from the exact
// Pr[R | g, y].
SupplementalDataset CellSamples(const JointTable& table, int per_cell,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SupplementalDataset train;
  for (std::size_t g = 0; g < table.num_geos(); ++g) {
    for (int y = 0; y < 2; ++y) {
      const RaceDistribution cell = RaceGivenGeoContext(table, g, y);
      std::discrete_distribution<std::size_t> draw(cell.probs().begin(),
                                                   cell.probs().end());
      for (int i = 0; i < per_cell; ++i) {
        train.records.push_back(testing::MakeRecord(
            std::to_string(train.records.size()), "", table.geo_names()[g], y,
            draw(rng)));
      }
    }
  }
  return train;
}

// Exact Pr[R | g, s, y] versus cBISG fitted at eta = 0 on many labeled
// samples per cell.
TEST(CbisgOracleTest, RecoversContextualConditional) {
  RandomDgpOptions options;
  options.num_geos = 4;
  options.num_surnames = 12;
  options.race_effect = 0.4;
  const JointTable table = BuildJoint(RandomDgp(options, 3));
  const CensusTables census = ExactCensusTables(table, 1e6);
  const SupplementalDataset train = CellSamples(table, 1000, 8);
  CbisgFitConfig config;
  config.eta = 0.0;
  const CbisgModel model =
      FitCbisg(census.geos, census.surnames, train, config);
  double total = 0.0;
  double weight = 0.0;
  for (std::size_t g = 0; g < table.num_geos(); ++g) {
    for (std::size_t s = 0; s < table.num_surnames(); ++s) {
      for (int y = 0; y < 2; ++y) {
        double mass = 0.0;
        for (std::size_t r = 0; r < 3; ++r) mass += table.mass(r, g, s, y);
        if (mass <= 0.0) continue;
        const RaceDistribution predicted =
            model.Predict(table.surname_names()[s], table.geo_names()[g], y);
        total += mass * L1Distance(predicted,
                                   RaceGivenGeoSurnameContext(table, g, s, y));
        weight += mass;
      }
    }
  }
  EXPECT_LE(total / weight, 0.05);
}

TEST(CbisgOracleTest, ConvergesToBisgWhenContextIsUninformative) {
  RandomDgpOptions options;
  options.num_geos = 3;
  options.num_surnames = 10;
  options.race_effect = 0.0;
  options.race_shift = {0.0, 0.0, 0.0};
  const JointTable table = BuildJoint(RandomDgp(options, 4));
  const CensusTables census = ExactCensusTables(table, 1e6);
  const BisgModel bisg(census.surnames, census.geos);
  const SupplementalDataset train = CellSamples(table, 10000, 12);
  CbisgFitConfig config;
  config.eta = 0.0;
  const CbisgModel model =
      FitCbisg(census.geos, census.surnames, train, config);
  for (const auto& geo : census.geos.geos()) {
    for (const auto& surname : census.surnames.surnames()) {
      for (int y = 0; y < 2; ++y) {
        EXPECT_LE(L1Distance(model.Predict(surname, geo, y),
                             bisg.Predict(surname, geo)),
                  0.05)
            << geo << " " << surname << " y=" << y;
      }
    }
  }
}

}  // namespace
}  // namespace fairproxy
