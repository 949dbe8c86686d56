#include <gtest/gtest.h>

#include "support.hpp"
#include "u2f/replay.hpp"

using namespace u2f;
using namespace u2f::testing;

TEST(Golden, RunsDiscoveryExplorationIntegration) {
    auto out = run_case(golden_story(), RunConfig{}, golden_services());
    ASSERT_EQ(out.result.status, Phase::Done) << out.result.failure_reason;
    EXPECT_EQ(out.result.phase_sequence, (std::vector<std::string>{"Discovery", "Exploration", "Integration"}));
    EXPECT_EQ(phase_sequence(out.trace), out.result.phase_sequence);
    ASSERT_EQ(out.result.uus.size(), 2u);
    EXPECT_EQ(out.result.uus[0].name, "Regional shutter-sound mandates");
    EXPECT_EQ(out.result.deliverable, "IntegratedSolution");
    ASSERT_TRUE(out.result.solution);
    EXPECT_EQ(out.result.solution->implementation_plan.phases.size(), 3u);
    EXPECT_EQ(out.result.solution->implementation_plan.toolchain.size(), 4u);
    EXPECT_EQ(out.result.solution->implementation_plan.risks.size(), 2u);
}

TEST(Golden, ReplayIsByteIdentical) {
    auto out = run_case(golden_story(), RunConfig{}, golden_services());
    const auto replayed = replay(out.trace);
    EXPECT_EQ(canonical_result(replayed), canonical_result(out.result));
}
