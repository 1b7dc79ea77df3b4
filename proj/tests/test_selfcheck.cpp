#include <gtest/gtest.h>

#include <algorithm>

#include "jitai/selfcheck.hpp"

namespace jitai {
namespace {

TEST(Selfcheck, AllChecksPass) {
  const SelfcheckReport report = run_selfcheck();
  EXPECT_EQ(report.checks.size(), selfcheck_names().size());
  for (const auto& c : report.checks) {
    EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
    EXPECT_GE(c.seconds, 0.0);
  }
  EXPECT_TRUE(report.all_passed());
}

TEST(Selfcheck, FlippedGradientSignIsCaught) {
  SelfcheckOptions opt;
  opt.flip_gradient_sign = true;
  opt.filter = "gradient";
  const SelfcheckReport report = run_selfcheck(opt);
  ASSERT_EQ(report.checks.size(), 2u);
  for (const auto& c : report.checks) EXPECT_FALSE(c.passed) << c.name;
  EXPECT_FALSE(report.all_passed());
}

TEST(Selfcheck, FilterSelectsBySubstring) {
  SelfcheckOptions opt;
  opt.filter = "posterior";
  const SelfcheckReport report = run_selfcheck(opt);
  ASSERT_EQ(report.checks.size(), 1u);
  EXPECT_EQ(report.checks[0].name, "env.posterior_error_rate");
  EXPECT_NE(report.checks[0].detail.find("sigma=0.4 measured=0.10"), std::string::npos);
  opt.filter = "no-such-check";
  EXPECT_TRUE(run_selfcheck(opt).checks.empty());
}

TEST(Selfcheck, NamesAreUnique) {
  auto names = selfcheck_names();
  std::sort(names.begin(), names.end());
  EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
}

}  // namespace
}  // namespace jitai
