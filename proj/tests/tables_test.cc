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

#include "fairproxy/tables.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "fairproxy/csv.h"

namespace fairproxy {
namespace {

const RaceSet kThree{"white", "black", "hispanic"};

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIo;
}

TEST(SurnameTableTest, DerivesConditionalFromRaceTotals) {
  const SurnameTable table = ParseSurnameTable(
      "surname,white,black,hispanic\n"
      "SMITH,70,20,10\n"
      "JONES,30,80,90\n",
      kThree);
  const auto probs = table.SurnameGivenRace("SMITH");
  ASSERT_TRUE(probs.has_value());
  EXPECT_DOUBLE_EQ((*probs)[0], 0.7);
  EXPECT_DOUBLE_EQ((*probs)[1], 0.2);
  EXPECT_DOUBLE_EQ((*probs)[2], 0.1);
}

TEST(SurnameTableTest, HeaderOnlyLoads) {
  const SurnameTable table =
      ParseSurnameTable("surname,white,black,hispanic\n", kThree);
  EXPECT_EQ(table.size(), 0u);
}

TEST(SurnameTableTest, NegativeCountIsMalformed) {
  EXPECT_EQ(CodeOf([] {
              ParseSurnameTable("surname,white,black,hispanic\nGARCIA,-1,0,0\n",
                                kThree);
            }),
            ErrorCode::kMalformedRow);
}

TEST(SurnameTableTest, WrongArityAndNonNumericAreMalformed) {
  EXPECT_EQ(CodeOf([] {
              ParseSurnameTable("surname,white,black,hispanic\nLEE,1,2\n",
                                kThree);
            }),
            ErrorCode::kMalformedRow);
  EXPECT_EQ(CodeOf([] {
              ParseSurnameTable("surname,white,black,hispanic\nLEE,1,x,2\n",
                                kThree);
            }),
            ErrorCode::kMalformedRow);
}

TEST(SurnameTableTest, DuplicateAfterNormalization) {
  EXPECT_EQ(CodeOf([] {
              ParseSurnameTable(
                  "surname,white,black,hispanic\nSmith,1,1,1\n SMITH ,2,2,2\n",
                  kThree);
            }),
            ErrorCode::kDuplicateSurname);
}

TEST(SurnameTableTest, HeaderMustMatchRaceOrder) {
  EXPECT_EQ(CodeOf([] {
              ParseSurnameTable("surname,black,white,hispanic\n", kThree);
            }),
            ErrorCode::kHeaderMismatch);
}

TEST(SurnameTableTest, ResidualRowKeepsColumnsSubStochastic) {
  const SurnameTable table = ParseSurnameTable(
      "surname,white,black,hispanic\n"
      "SMITH,70,20,10\n"
      "ALL OTHER NAMES,30,80,90\n",
      kThree);
  EXPECT_EQ(table.size(), 1u);
  EXPECT_FALSE(table.Contains("ALL OTHER NAMES"));
  const auto probs = *table.SurnameGivenRace("smith");
  EXPECT_DOUBLE_EQ(probs[0], 0.7);
  for (double p : probs) EXPECT_LE(p, 1.0);
}

TEST(GeoTableTest, DerivesRaceGivenGeo) {
  const RaceSet two{"a", "b"};
  const GeoTable table = ParseGeoTable("geo_id,a,b\nT001,50,50\n", two);
  const RaceDistribution d = table.RaceGivenGeo("T001");
  EXPECT_DOUBLE_EQ(d[0], 0.5);
  EXPECT_DOUBLE_EQ(d[1], 0.5);
}

TEST(GeoTableTest, DuplicateAndZeroRows) {
  const RaceSet two{"a", "b"};
  EXPECT_EQ(CodeOf([&] {
              ParseGeoTable("geo_id,a,b\nT001,1,1\nT001,2,2\n", two);
            }),
            ErrorCode::kDuplicateGeo);
  EXPECT_EQ(CodeOf([&] { ParseGeoTable("geo_id,a,b\nT001,0,0\n", two); }),
            ErrorCode::kZeroGeoRow);
  const GeoTable table = ParseGeoTable("geo_id,a,b\nT001,1,1\n", two);
  EXPECT_EQ(CodeOf([&] { table.RaceGivenGeo("T999"); }),
            ErrorCode::kUnknownGeo);
}

TEST(GeoTableTest, AcceptsFullTractScale) {
  std::string text = "geo_id,white,black,hispanic\n";
  for (int i = 0; i < 73057; ++i) {
    text += "T" + std::to_string(i) + "," + std::to_string(1 + i % 7) + "," +
            std::to_string(i % 5) + "," + std::to_string(i % 3) + "\n";
  }
  EXPECT_EQ(ParseGeoTable(text, kThree).size(), 73057u);
}

TEST(TablesTest, SerializeRoundTripIsByteIdentical) {
  const std::string surnames =
      "surname,white,black,hispanic\nJONES,30,80,90\nSMITH,70,20,10\n";
  EXPECT_EQ(SerializeSurnameTable(ParseSurnameTable(surnames, kThree)),
            surnames);
  const std::string geos = "geo_id,white,black,hispanic\nT001,5,3,2\n";
  EXPECT_EQ(SerializeGeoTable(ParseGeoTable(geos, kThree)), geos);
}

TEST(SupplementalTest, ParsesRecordWithCovariates) {
  const SupplementalDataset data = ParseSupplemental(
      "id,surname,geo,y,race,z1,z2\n7,SMITH,T001,1,white,1.2,0.4\n", kThree);
  ASSERT_EQ(data.size(), 1u);
  const auto& record = data.records[0];
  EXPECT_EQ(record.id, "7");
  EXPECT_EQ(record.context, 1);
  EXPECT_EQ(record.race, 0u);
  ASSERT_EQ(record.covariates.size(), 2u);
  EXPECT_DOUBLE_EQ(record.covariates[0], 1.2);
  EXPECT_DOUBLE_EQ(record.covariates[1], 0.4);
  EXPECT_TRUE(data.labeled());
}

TEST(SupplementalTest, ValidationErrors) {
  EXPECT_EQ(CodeOf([] {
              ParseSupplemental("id,surname,geo,y,race\n1,A,T1,2,white\n",
                                kThree);
            }),
            ErrorCode::kInvalidContext);
  EXPECT_EQ(CodeOf([] {
              ParseSupplemental("id,surname,geo,y,race\n1,A,T1,1,martian\n",
                                kThree);
            }),
            ErrorCode::kUnknownRace);
  EXPECT_EQ(CodeOf([] {
              ParseSupplemental("id,surname,geo,y,race,z1\n1,A,T1,1,white\n",
                                kThree);
            }),
            ErrorCode::kInconsistentCovariateArity);
}

TEST(SupplementalTest, NoCovariatesAndUnlabeledRows) {
  const SupplementalDataset data = ParseSupplemental(
      "id,surname,geo,y,race\n1,A,T1,0,\n2,,T2,1,black\n", kThree);
  ASSERT_EQ(data.size(), 2u);
  EXPECT_TRUE(data.records[0].covariates.empty());
  EXPECT_FALSE(data.records[0].race.has_value());
  EXPECT_EQ(data.records[1].surname, "");
  EXPECT_FALSE(data.labeled());
}

TEST(SupplementalTest, CategoricalColumnsAreOneHot) {
  const SupplementalDataset data = ParseSupplemental(
      "id,surname,geo,y,race,cat:loan\n1,A,T1,0,white,b\n2,A,T1,1,white,a\n",
      kThree);
  EXPECT_EQ(data.covariates.width(), 2u);
  EXPECT_EQ(data.records[0].covariates, (std::vector<double>{0, 1}));
  EXPECT_EQ(data.records[1].covariates, (std::vector<double>{1, 0}));
  // A test file sharing the layout maps unseen levels to all zeros.
  const SupplementalDataset test = ParseSupplemental(
      "id,surname,geo,y,race,cat:loan\n3,A,T1,0,,c\n", kThree,
      &data.covariates);
  EXPECT_EQ(test.records[0].covariates, (std::vector<double>{0, 0}));
}

TEST(SupplementalTest, SerializeRoundTrip) {
  const std::string text =
      "id,surname,geo,y,race,z1\n1,SMITH,T1,1,white,0.5\n2,,T2,0,,-1\n";
  const SupplementalDataset data = ParseSupplemental(text, kThree);
  const SupplementalDataset again =
      ParseSupplemental(SerializeSupplemental(data, kThree), kThree);
  ASSERT_EQ(again.size(), 2u);
  EXPECT_EQ(again.records[1].covariates, data.records[1].covariates);
  EXPECT_EQ(again.records[0].race, data.records[0].race);
}

SupplementalDataset ColumnDataset(std::vector<double> column) {
  SupplementalDataset data;
  data.covariates.sources.push_back({"z", false, {}});
  for (std::size_t i = 0; i < column.size(); ++i) {
    AttributedRecord record;
    record.id = std::to_string(i);
    record.geo = "T1";
    record.covariates = {column[i]};
    data.records.push_back(record);
  }
  return data;
}

TEST(StandardizeTest, ForcedArithmetic) {
  const StandardizeResult result =
      StandardizeCovariates(ColumnDataset({1, 2, 3}));
  const double expected = std::sqrt(1.5);
  EXPECT_NEAR(result.dataset.records[0].covariates[0], -expected, 1e-12);
  EXPECT_NEAR(result.dataset.records[1].covariates[0], 0.0, 1e-12);
  EXPECT_NEAR(result.dataset.records[2].covariates[0], expected, 1e-12);
  EXPECT_NEAR(expected, 1.2247, 1e-4);
  EXPECT_TRUE(result.zero_variance_columns.empty());
}

TEST(StandardizeTest, ConstantColumnIsCenteredAndFlagged) {
  const StandardizeResult result =
      StandardizeCovariates(ColumnDataset({5, 5, 5}));
  for (const auto& record : result.dataset.records) {
    EXPECT_EQ(record.covariates[0], 0.0);
  }
  EXPECT_EQ(result.zero_variance_columns, std::vector<std::size_t>{0});
}

TEST(StandardizeTest, TransformReproducesTrainingSet) {
  const SupplementalDataset data = ColumnDataset({0.3, -2.0, 7.5, 1.0, 1.1});
  const StandardizeResult result = StandardizeCovariates(data);
  const SupplementalDataset again = result.transform.Apply(data);
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(again.records[i].covariates, result.dataset.records[i].covariates);
    sum += again.records[i].covariates[0];
    sq += again.records[i].covariates[0] * again.records[i].covariates[0];
  }
  EXPECT_NEAR(sum / data.size(), 0.0, 1e-9);
  EXPECT_NEAR(sq / data.size(), 1.0, 1e-9);
}

TEST(StandardizeTest, EmptyDatasetThrows) {
  EXPECT_THROW(StandardizeCovariates(SupplementalDataset{}), Error);
}

TEST(GroupCountsTest, CountsOneCell) {
  std::string text = "id,surname,geo,y,race\n";
  const char* races[] = {"white", "white", "black", "black", "black",
                         "hispanic"};
  for (int i = 0; i < 6; ++i) {
    text += std::to_string(i) + ",S,G1,1," + races[i] + "\n";
  }
  text += "9,S,G1,0,white\n10,S,G2,1,black\n";
  const SupplementalDataset data = ParseSupplemental(text, kThree);
  EXPECT_EQ(GroupCounts(data, 3, "G1", 1), (std::vector<double>{2, 3, 1}));
  EXPECT_EQ(GroupCounts(data, 3, "G3", 1), (std::vector<double>{0, 0, 0}));
  double total = 0.0;
  for (const auto& [key, counts] : CountCells(data, 3)) {
    for (double c : counts) total += c;
  }
  EXPECT_EQ(total, static_cast<double>(data.size()));
}

TEST(GroupCountsTest, RequiresLabels) {
  const SupplementalDataset data =
      ParseSupplemental("id,surname,geo,y,race\n1,S,G1,1,\n", kThree);
  EXPECT_EQ(CodeOf([&] { GroupCounts(data, 3, "G1", 1); }),
            ErrorCode::kUnlabeledDataset);
}

TEST(SplitTest, StableUnderRowReordering) {
  std::string text = "id,surname,geo,y,race\n";
  for (int i = 0; i < 500; ++i) {
    text += "p" + std::to_string(i) + ",S,G1," + std::to_string(i % 2) +
            ",white\n";
  }
  SupplementalDataset data = ParseSupplemental(text, kThree);
  auto [train, test] = SplitByIdHash(data, 0.7, 42);
  EXPECT_EQ(train.size() + test.size(), 500u);
  EXPECT_NEAR(train.size() / 500.0, 0.7, 0.08);

  std::reverse(data.records.begin(), data.records.end());
  auto [train2, test2] = SplitByIdHash(data, 0.7, 42);
  auto ids = [](const SupplementalDataset& d) {
    std::vector<std::string> out;
    for (const auto& r : d.records) out.push_back(r.id);
    std::sort(out.begin(), out.end());
    return out;
  };
  EXPECT_EQ(ids(train), ids(train2));
  EXPECT_EQ(ids(test), ids(test2));
  EXPECT_NE(ids(SplitByIdHash(data, 0.7, 43).first), ids(train));
  EXPECT_THROW(SplitByIdHash(data, 1.0, 1), Error);
}

TEST(CsvTest, FormatDoubleRoundTripsAt17Digits) {
  for (double v : {0.1, 1.0 / 3.0, 2.5e-300, 123456.789}) {
    double back = 0.0;
    ASSERT_TRUE(csv::ParseDouble(csv::FormatDouble(v, 17), &back));
    EXPECT_EQ(back, v);
  }
}

}  // namespace
}  // namespace fairproxy
