#include "test_support.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

#include <gtest/gtest.h>

#include "pepforge/sdp.hpp"

namespace pepforge::testing {

namespace {

std::mutex g_mutex;
AuditCounters g_audit;

void observe(const sdp::SdpSolution& s) {
  if (s.status != sdp::Status::optimal) return;
  const double bar = 1e-7 * (1.0 + std::abs(s.value()));
  std::lock_guard lock(g_mutex);
  ++g_audit.optimal;
  if (s.gap <= bar && s.primal_infeasibility <= bar && s.dual_infeasibility <= bar) return;
  std::ostringstream os;
  os << "value " << s.value() << " gap " << s.gap << " pinf " << s.primal_infeasibility << " dinf "
     << s.dual_infeasibility;
  g_audit.failures.push_back(os.str());
}

class AuditEnvironment : public ::testing::Environment {
 public:
  void SetUp() override { sdp::set_solve_observer(observe); }
  void TearDown() override {
    sdp::set_solve_observer({});
    for (const auto& f : g_audit.failures) ADD_FAILURE() << "inaccurate optimal solve: " << f;
  }
};

}  // namespace

const AuditCounters& audit() { return g_audit; }

}  // namespace pepforge::testing

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  ::testing::AddGlobalTestEnvironment(new pepforge::testing::AuditEnvironment);
  return RUN_ALL_TESTS();
}
