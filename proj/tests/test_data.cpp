#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "psbounds/csv.hpp"
#include "psbounds/data.hpp"

using namespace psbounds;

namespace {

Errc parse_error(const std::string& text, long* row = nullptr, std::string* column = nullptr) {
  std::istringstream in(text);
  try {
    parse_csv(in, Schema{});
  } catch (const Error& e) {
    if (row) *row = e.row();
    if (column) *column = e.column();
    return e.code();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return Errc::InvalidArgument;
}

}  // namespace

TEST(Csv, LoadsDs1File) {
  const Dataset ds = load_csv(std::string(PSBOUNDS_DATA_DIR) + "/ds1.csv");
  EXPECT_EQ(ds.size(), 24u);
  EXPECT_DOUBLE_EQ(ds.total_weight(), 24.0);
  // file order is preserved
  EXPECT_EQ(ds[0].d, 0);
  EXPECT_EQ(ds[0].z, 1);
  EXPECT_DOUBLE_EQ(*ds[0].y, 1.0);
  EXPECT_FALSE(ds[2].y.has_value());
}

TEST(Csv, RoundTrip) {
  const auto ds = fixtures::ds1();
  std::stringstream buf;
  write_csv(buf, ds);
  const Dataset back = parse_csv(buf, Schema{});
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back[i].d, ds[i].d);
    EXPECT_EQ(back[i].s, ds[i].s);
    EXPECT_EQ(back[i].y, ds[i].y);
  }
}

TEST(Csv, OutcomeWithUnselectedRow) {
  long row = 0;
  EXPECT_EQ(parse_error("y,d,z,s,w\n1,0,0,1,1\n2.5,1,0,0,1\n", &row), Errc::OutcomePresentWhenUnselected);
  EXPECT_EQ(row, 2);
}

TEST(Csv, ZeroWeight) {
  long row = 0;
  std::string col;
  EXPECT_EQ(parse_error("y,d,z,s,w\n1,0,0,1,0\n", &row, &col), Errc::NonpositiveWeight);
  EXPECT_EQ(row, 1);
  EXPECT_EQ(col, "w");
}

TEST(Csv, MissingColumn) {
  std::string col;
  EXPECT_EQ(parse_error("y,d,s,w\n1,0,1,1\n", nullptr, &col), Errc::MissingColumn);
  EXPECT_EQ(col, "z");
}

TEST(Csv, BadValueReportsRowAndColumn) {
  long row = 0;
  std::string col;
  EXPECT_EQ(parse_error("y,d,z,s,w\n1,0,0,1,1\n1,2,0,1,1\n", &row, &col), Errc::BadValue);
  EXPECT_EQ(row, 2);
  EXPECT_EQ(col, "d");
  EXPECT_EQ(parse_error("y,d,z,s,w\nabc,0,0,1,1\n", &row, &col), Errc::BadValue);
  EXPECT_EQ(col, "y");
  EXPECT_EQ(parse_error("y,d,z,s,w\n,0,0,1,1\n"), Errc::BadValue);
}

TEST(Csv, MissingOutcomeEncodings) {
  std::istringstream in("y,d,z,s,w\nNA,0,0,0,1\n,0,1,0,2\n\"3\",1,1,1,1.5\n");
  const Dataset ds = parse_csv(in, Schema{});
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_FALSE(ds[0].y.has_value());
  EXPECT_FALSE(ds[1].y.has_value());
  EXPECT_DOUBLE_EQ(*ds[2].y, 3.0);
  EXPECT_DOUBLE_EQ(ds[2].w, 1.5);
}

TEST(Csv, SchemaMappingAndCovariates) {
  std::istringstream in("wage,female,kids,emp,x1\n2,1,0,1,0.5\n,0,1,0,1.5\n");
  Schema s;
  s.y = "wage";
  s.d = "female";
  s.z = "kids";
  s.s = "emp";
  s.w.reset();
  s.x = {"x1"};
  const Dataset ds = parse_csv(in, s);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.covariate_names(), std::vector<std::string>{"x1"});
  EXPECT_DOUBLE_EQ(ds[1].x[0], 1.5);
  EXPECT_DOUBLE_EQ(ds[1].w, 1.0);
}

TEST(Dataset, RejectsEmptyAndMixedArity) {
  EXPECT_THROW(Dataset({}), Error);
  std::vector<Observation> r(2);
  r[0].x = {1.0};
  try {
    Dataset ds(r, {"x1"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidObservation);
    EXPECT_EQ(e.row(), 2);
  }
}

TEST(CellStats, Ds1) {
  const auto ds = fixtures::ds1();
  const auto c01 = cell_stats(ds, 0, 1);
  EXPECT_EQ(c01.n, 4u);
  EXPECT_DOUBLE_EQ(c01.p_select, 0.5);
  EXPECT_DOUBLE_EQ(*c01.y_mean, 1.5);
  EXPECT_DOUBLE_EQ(*c01.y_var, 0.25);
  const auto c11 = cell_stats(ds, 1, 1);
  EXPECT_DOUBLE_EQ(c11.p_select, 1.0);
  EXPECT_DOUBLE_EQ(*c11.y_mean, 4.5);
}

TEST(CellStats, ConstantOutcomeHasZeroVariance) {
  std::vector<Observation> r;
  for (int i = 0; i < 5; ++i) fixtures::add(r, 1, 0, 2.5, 1.0 + i);
  EXPECT_EQ(*cell_stats(Dataset(r), 1, 0).y_var, 0.0);
}

TEST(CellStats, EmptyCellAndNoSelected) {
  std::vector<Observation> r;
  fixtures::add(r, 0, 0, std::nullopt);
  const Dataset ds(r);
  EXPECT_THROW(cell_stats(ds, 1, 1), Error);
  const auto c = cell_stats(ds, 0, 0);
  EXPECT_EQ(c.p_select, 0.0);
  EXPECT_FALSE(c.y_mean.has_value());
  EXPECT_FALSE(c.y_var.has_value());
}

TEST(CellStatsProperty, WeightRescalingInvariance) {
  std::mt19937_64 rng(3);
  const auto ds = fixtures::random_dataset(rng, 20, true);
  auto rows = ds.observations();
  for (auto& o : rows) o.w *= 3.7;
  const Dataset scaled(rows);
  for (int d = 0; d < 2; ++d)
    for (int z = 0; z < 2; ++z) {
      const auto a = cell_stats(ds, d, z), b = cell_stats(scaled, d, z);
      EXPECT_NEAR(a.p_select, b.p_select, 1e-14);
      EXPECT_NEAR(*a.y_mean, *b.y_mean, 1e-12);
      EXPECT_NEAR(*a.y_var, *b.y_var, 1e-12);
      EXPECT_GE(a.p_select, 0.0);
      EXPECT_LE(a.p_select, 1.0);
    }
}

TEST(CellStatsProperty, SelfConcatenation) {
  std::mt19937_64 rng(4);
  const auto ds = fixtures::random_dataset(rng, 15, true);
  auto rows = ds.observations();
  rows.insert(rows.end(), ds.begin(), ds.end());
  const Dataset twice(rows);
  for (int d = 0; d < 2; ++d)
    for (int z = 0; z < 2; ++z) {
      const auto a = cell_stats(ds, d, z), b = cell_stats(twice, d, z);
      EXPECT_EQ(b.n, 2 * a.n);
      EXPECT_NEAR(b.w_total, 2 * a.w_total, 1e-12);
      EXPECT_NEAR(a.p_select, b.p_select, 1e-14);
      EXPECT_NEAR(*a.y_mean, *b.y_mean, 1e-12);
      EXPECT_NEAR(*a.y_var, *b.y_var, 1e-12);
    }
}
