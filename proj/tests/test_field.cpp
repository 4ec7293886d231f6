#include "anisomg/field.hh"

#include "oracles.hh"

#include <gtest/gtest.h>

#include <random>

using namespace anisomg;

namespace {
FieldSpec kind(FieldKind k, std::vector<double> params = {})
{
  FieldSpec s;
  s.kind = k;
  s.params = std::move(params);
  return s;
}
} // namespace

TEST(Field, CircularFieldIsTangentToCircles)
{
  const FieldSpec s = kind(FieldKind::Circular);
  const Vec2 b = eval_b(s, {0.75, 0.5});
  EXPECT_NEAR(b.x, 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b.y), 1.0, 1e-15);
  // Tangency: b is orthogonal to the radius vector at random points.
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const Point x{u(rng), u(rng)};
    const Vec2 t = eval_b(s, x);
    EXPECT_NEAR(t.x * (x.x - 0.5) + t.y * (x.y - 0.5), 0.0, 1e-14);
  }
}

TEST(Field, NullPointGivesZeroVector)
{
  const Vec2 b = eval_b(kind(FieldKind::Circular), {0.5, 0.5});
  EXPECT_EQ(b.x, 0.0);
  EXPECT_EQ(b.y, 0.0);
  const Vec2 c = eval_b(kind(FieldKind::SingleIsland), {0.5, 0.5});
  EXPECT_EQ(c.x, 0.0);
  EXPECT_EQ(c.y, 0.0);
}

TEST(Field, ConstantDirection)
{
  const Vec2 b = eval_b(kind(FieldKind::Constant, {1.0, 0.0}), {0.123, 0.987});
  EXPECT_EQ(b.x, 1.0);
  EXPECT_EQ(b.y, 0.0);
  const Vec2 c = eval_b(kind(FieldKind::Constant, {3.0, 4.0}), {0.5, 0.5});
  EXPECT_DOUBLE_EQ(c.x, 0.6);
  EXPECT_DOUBLE_EQ(c.y, 0.8);
}

TEST(Field, PresetsHaveUnitDirectionOffNulls)
{
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& s : builtin_tests(1.0, 1e6))
    for (int k = 0; k < 200; ++k) {
      const Point x{u(rng), u(rng)};
      const Vec2 b = eval_b(s, x);
      const double n = b.norm();
      if (n > 0) EXPECT_NEAR(n, 1.0, 1e-14);
    }
}

TEST(Field, PresetsAreDeterministic)
{
  const auto a = builtin_tests(), b = builtin_tests();
  for (int i = 0; i < 3; ++i) {
    const Vec2 u = eval_b(a[i], {0.31, 0.77}), v = eval_b(b[i], {0.31, 0.77});
    EXPECT_EQ(u.x, v.x);
    EXPECT_EQ(u.y, v.y);
  }
}

TEST(Field, SingleIslandLinesAreClosed)
{
  const FieldSpec s = builtin_tests()[0];
  int closed = 0, null = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const auto k = oracle::trace(s, {(i + 0.5) / 5, (j + 0.5) / 5});
      closed += k == oracle::LineKind::Closed;
      null += k == oracle::LineKind::Null;
    }
  EXPECT_EQ(closed + null, 25);
  EXPECT_LE(null, 1);
}

TEST(Field, DoubleIslandLinesAreClosed)
{
  const FieldSpec s = builtin_tests()[1];
  int closed = 0, other = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const auto k = oracle::trace(s, {(i + 0.5) / 5 + 0.013, (j + 0.5) / 5});
      closed += k == oracle::LineKind::Closed;
      other += k != oracle::LineKind::Closed;
    }
  EXPECT_EQ(other, 0);
}

TEST(Field, MixedPresetHasMostlyOpenLines)
{
  const FieldSpec s = builtin_tests()[2];
  int open = 0, closed = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const auto k = oracle::trace(s, {(i + 0.5) / 10, (j + 0.5) / 10});
      open += k == oracle::LineKind::Open;
      closed += k == oracle::LineKind::Closed;
    }
  EXPECT_GE(open, 50);
  EXPECT_GT(closed, 0);
}

TEST(Field, ConductivityAccessors)
{
  FieldSpec s;
  s.k_perp = 0.3;
  s.k_par = 0.3 * 1e6;
  EXPECT_EQ(s.k_delta(), s.k_par - s.k_perp);
  const FieldSpec t = s.with_ratio(1e9);
  EXPECT_DOUBLE_EQ(t.ratio(), 1e9);
  EXPECT_EQ(t.k_perp, 0.3);
}

TEST(Field, Validation)
{
  FieldSpec s;
  s.k_perp = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.k_perp = 2.0;
  s.k_par = 1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(kind(FieldKind::Constant).validate(), ConfigError);
  EXPECT_THROW(kind(FieldKind::Table, {1, 1, 0, 0}).validate(), ConfigError);
  AnisotropySweep sw{{1e6, 1e3}};
  EXPECT_THROW(sw.validate(), ConfigError);
}

TEST(Field, KindNames)
{
  for (FieldKind k : {FieldKind::SingleIsland, FieldKind::DoubleIsland, FieldKind::Mixed, FieldKind::Circular, FieldKind::Constant, FieldKind::Table})
    EXPECT_EQ(field_kind_from_string(to_string(k)), k);
  EXPECT_EQ(field_kind_from_string("test1"), FieldKind::SingleIsland);
  EXPECT_EQ(field_kind_from_string("test3"), FieldKind::Mixed);
  EXPECT_THROW(field_kind_from_string("nope"), ConfigError);
}

TEST(Field, TableFieldInterpolatesNodalData)
{
  // 1x1 table: bx = x, by = 1 at the corners (0,0),(1,0),(0,1),(1,1).
  const FieldSpec s = kind(FieldKind::Table, {1, 1, 0, 1, 0, 1, 1, 1, 1, 1});
  s.validate();
  const Vec2 B = magnetic_field(s, {0.25, 0.7});
  EXPECT_DOUBLE_EQ(B.x, 0.25);
  EXPECT_DOUBLE_EQ(B.y, 1.0);
}
