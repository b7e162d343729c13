#include <cmath>

#include "pepforge/sdp.hpp"

namespace pepforge::sdp {

void StandardSdp::validate() const {
  if (rows.size() != rhs.size()) throw ModelError("row and rhs counts differ");
  auto check = [&](const LinearFunctional& f, const std::string& where) {
    for (const Entry& e : f.entries) {
      if (e.block < 0 || e.block >= static_cast<int>(blocks.size()))
        throw ModelError(where + ": entry references block " + std::to_string(e.block));
      const Block& b = blocks[static_cast<std::size_t>(e.block)];
      if (e.row < 0 || e.row >= b.size) throw ModelError(where + ": row index out of range");
      if (b.kind == BlockKind::psd) {
        if (e.col < e.row || e.col >= b.size) throw ModelError(where + ": psd entries must be upper-triangular");
      } else if (e.col != 0) {
        throw ModelError(where + ": linear block entries use column 0");
      }
      if (!std::isfinite(e.value)) throw ModelError(where + ": non-finite coefficient");
    }
  };
  check(objective, "objective");
  for (std::size_t k = 0; k < rows.size(); ++k) check(rows[k], "row " + std::to_string(k));
}

namespace {

void append_expr(LinearFunctional& f, const QuadExpr& e, double scale, int gram_block, int fval_block) {
  for (const auto& [key, c] : e.gram_coeffs()) f.entries.push_back({gram_block, key.first, key.second, scale * c});
  for (const auto& [id, c] : e.fval_coeffs()) f.entries.push_back({fval_block, id, 0, scale * c});
}

}  // namespace

CompiledSdp compile(const Problem& p) {
  CompiledSdp out;
  StandardSdp& s = out.sdp;

  int next_block = 0;
  if (p.basis_size() > 0) {
    out.gram_block = next_block++;
    s.blocks.push_back({BlockKind::psd, p.basis_size()});
  }
  if (p.scalar_count() > 0) {
    out.fval_block = next_block++;
    s.blocks.push_back({BlockKind::free, p.scalar_count()});
  }

  const auto& cs = p.constraints();
  out.slots.resize(cs.size());
  int slack_count = 0;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    const Constraint& c = cs[k];
    if (c.kind == ConstraintKind::le0 && c.body.is_constant() && c.body.constant() <= 0.0) {
      out.slots[k].dropped = true;
    } else if (c.kind == ConstraintKind::eq0 && c.body.is_constant() && c.body.constant() == 0.0) {
      out.slots[k].dropped = true;
    } else if (c.kind == ConstraintKind::le0) {
      out.slots[k].slack = slack_count++;
    }
  }
  if (slack_count > 0) {
    out.slack_block = next_block++;
    s.blocks.push_back({BlockKind::nonneg, slack_count});
  }

  auto reference = [&](const QuadExpr& e) {
    if ((!e.gram_coeffs().empty() && out.gram_block < 0) || (!e.fval_coeffs().empty() && out.fval_block < 0))
      throw ModelError("expression references an empty variable block");
  };

  reference(p.objective());
  append_expr(s.objective, p.objective(), 1.0, out.gram_block, out.fval_block);
  s.objective_constant = p.objective().constant();

  for (std::size_t k = 0; k < cs.size(); ++k) {
    const Constraint& c = cs[k];
    ConstraintSlot& slot = out.slots[k];
    if (slot.dropped) continue;
    slot.first_row = s.row_count();
    if (c.kind != ConstraintKind::lmi) {
      reference(c.body);
      LinearFunctional row;
      append_expr(row, c.body, 1.0, out.gram_block, out.fval_block);
      if (c.kind == ConstraintKind::le0) row.entries.push_back({out.slack_block, slot.slack, 0, 1.0});
      s.rows.push_back(std::move(row));
      s.rhs.push_back(-c.body.constant());
      slot.row_count = 1;
      continue;
    }
    slot.aux_block = next_block++;
    s.blocks.push_back({BlockKind::psd, c.size});
    for (int i = 0; i < c.size; ++i) {
      for (int j = i; j < c.size; ++j) {
        const QuadExpr& e = c.entry(i, j);
        reference(e);
        LinearFunctional row;
        row.entries.push_back({slot.aux_block, i, j, 1.0});
        append_expr(row, e, -1.0, out.gram_block, out.fval_block);
        s.rows.push_back(std::move(row));
        s.rhs.push_back(e.constant());
        ++slot.row_count;
      }
    }
  }
  return out;
}

}  // namespace pepforge::sdp
