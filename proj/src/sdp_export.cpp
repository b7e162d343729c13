#include <iomanip>
#include <ostream>

#include "pepforge/sdp.hpp"

namespace pepforge::sdp {

std::vector<DualEntry> dual_report(const SdpSolution& sol, const CompiledSdp& compiled, const Problem& p) {
  if (sol.status != Status::optimal) throw ModelError("dual report requires an optimal solve, got " + to_string(sol.status));
  const auto& cs = p.constraints();
  if (cs.size() != compiled.slots.size()) throw ModelError("compiled program does not match the problem");

  std::vector<DualEntry> out;
  out.reserve(cs.size());
  for (std::size_t k = 0; k < cs.size(); ++k) {
    const ConstraintSlot& slot = compiled.slots[k];
    DualEntry e{cs[k].label, cs[k].kind, 0.0, {}};
    if (!slot.dropped) {
      switch (cs[k].kind) {
        case ConstraintKind::le0:
          // The slack's dual slack equals -y for its row and is the multiplier.
          e.multiplier = sol.dual_slack[static_cast<std::size_t>(compiled.slack_block)](slot.slack, 0);
          break;
        case ConstraintKind::eq0:
          e.multiplier = -sol.y(slot.first_row);
          break;
        case ConstraintKind::lmi:
          e.lmi_dual = sol.dual_slack[static_cast<std::size_t>(slot.aux_block)];
          e.multiplier = e.lmi_dual.trace();
          break;
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_sdpa(std::ostream& os, const StandardSdp& s) {
  s.validate();
  // Block layout in the file: psd blocks keep their size, nonneg blocks become
  // diagonal blocks, and each free block becomes a diagonal block of twice its
  // size holding (u, v) with x = u - v.
  std::vector<int> file_block(s.blocks.size());
  for (std::size_t k = 0; k < s.blocks.size(); ++k) file_block[k] = static_cast<int>(k) + 1;

  os << "* pep-forge SDPA export\n";
  os << "* maximize <C,X> + " << std::setprecision(17) << s.objective_constant << "\n";
  os << s.row_count() << " = mDIM\n";
  os << s.blocks.size() << " = nBLOCK\n";
  for (std::size_t k = 0; k < s.blocks.size(); ++k) {
    const Block& b = s.blocks[k];
    if (k) os << ' ';
    switch (b.kind) {
      case BlockKind::psd: os << b.size; break;
      case BlockKind::nonneg: os << -b.size; break;
      case BlockKind::free: os << -2 * b.size; break;
    }
  }
  os << " = bLOCKsTRUCT\n";
  for (int k = 0; k < s.row_count(); ++k) os << (k ? " " : "") << s.rhs[static_cast<std::size_t>(k)];
  os << "\n";

  auto emit = [&](int matno, const LinearFunctional& f) {
    for (const Entry& e : f.entries) {
      const Block& b = s.blocks[static_cast<std::size_t>(e.block)];
      const int fb = file_block[static_cast<std::size_t>(e.block)];
      switch (b.kind) {
        case BlockKind::psd: {
          const double v = e.row == e.col ? e.value : 0.5 * e.value;
          os << matno << ' ' << fb << ' ' << e.row + 1 << ' ' << e.col + 1 << ' ' << v << "\n";
          break;
        }
        case BlockKind::nonneg:
          os << matno << ' ' << fb << ' ' << e.row + 1 << ' ' << e.row + 1 << ' ' << e.value << "\n";
          break;
        case BlockKind::free:
          os << matno << ' ' << fb << ' ' << e.row + 1 << ' ' << e.row + 1 << ' ' << e.value << "\n";
          os << matno << ' ' << fb << ' ' << b.size + e.row + 1 << ' ' << b.size + e.row + 1 << ' ' << -e.value
             << "\n";
          break;
      }
    }
  };
  emit(0, s.objective);
  for (int k = 0; k < s.row_count(); ++k) emit(k + 1, s.rows[static_cast<std::size_t>(k)]);
}

}  // namespace pepforge::sdp
