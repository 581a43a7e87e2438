#include "bdtt/lp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace bdtt {

int LinearProgram::addVariable(double lower, double upper, double objective,
                               bool integral, std::string name) {
  Variable v;
  v.lower = lower;
  v.upper = upper;
  v.objective = objective;
  v.integral = integral;
  v.name = std::move(name);
  vars_.push_back(std::move(v));
  return static_cast<int>(vars_.size()) - 1;
}

int LinearProgram::addRow(RowSense sense, double rhs, SparseVec coeffs,
                          std::string name) {
  Row r;
  r.sense = sense;
  r.rhs = rhs;
  r.coeffs = std::move(coeffs);
  r.name = std::move(name);
  rows_.push_back(std::move(r));
  return static_cast<int>(rows_.size()) - 1;
}

void LinearProgram::setBounds(int j, double lower, double upper) {
  vars_[j].lower = lower;
  vars_[j].upper = upper;
}

void LinearProgram::setObjective(int j, double objective) {
  vars_[j].objective = objective;
}

void LinearProgram::setRhs(int i, double rhs) { rows_[i].rhs = rhs; }

std::vector<std::string> LinearProgram::validate() const {
  std::vector<std::string> problems;
  const int n = numVariables();
  for (int j = 0; j < n; ++j) {
    if (vars_[j].lower > vars_[j].upper + 1e-12) {
      problems.push_back("variable " + std::to_string(j) +
                         " has lower > upper");
    }
  }
  std::vector<int32_t> seen;
  for (int i = 0; i < numRows(); ++i) {
    seen.clear();
    for (const auto& [col, val] : rows_[i].coeffs) {
      if (col < 0 || col >= n) {
        problems.push_back("row " + std::to_string(i) + " references column " +
                           std::to_string(col));
        continue;
      }
      seen.push_back(col);
      (void)val;
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
      problems.push_back("row " + std::to_string(i) + " has duplicate columns");
    }
  }
  return problems;
}

std::string LinearProgram::dumpCplexLp() const {
  std::ostringstream out;
  auto vname = [&](int j) {
    if (!vars_[j].name.empty()) return vars_[j].name;
    return "x" + std::to_string(j);
  };
  out << "Minimize\n obj:";
  for (int j = 0; j < numVariables(); ++j) {
    double c = vars_[j].objective;
    if (c == 0.0) continue;
    out << (c >= 0 ? " + " : " - ") << std::abs(c) << " " << vname(j);
  }
  out << "\nSubject To\n";
  for (int i = 0; i < numRows(); ++i) {
    const Row& r = rows_[i];
    out << (r.name.empty() ? "c" + std::to_string(i) : r.name) << ":";
    for (const auto& [col, val] : r.coeffs) {
      out << (val >= 0 ? " + " : " - ") << std::abs(val) << " " << vname(col);
    }
    switch (r.sense) {
      case RowSense::LessEqual: out << " <= "; break;
      case RowSense::Equal: out << " = "; break;
      case RowSense::GreaterEqual: out << " >= "; break;
    }
    out << r.rhs << "\n";
  }
  out << "Bounds\n";
  for (int j = 0; j < numVariables(); ++j) {
    const Variable& v = vars_[j];
    if (v.lower == -kInfinity && v.upper == kInfinity) {
      out << " " << vname(j) << " free\n";
    } else if (v.lower == -kInfinity) {
      out << " -inf <= " << vname(j) << " <= " << v.upper << "\n";
    } else if (v.upper == kInfinity) {
      out << " " << vname(j) << " >= " << v.lower << "\n";
    } else {
      out << " " << v.lower << " <= " << vname(j) << " <= " << v.upper << "\n";
    }
  }
  out << "Generals\n";
  for (int j = 0; j < numVariables(); ++j) {
    if (vars_[j].integral) out << " " << vname(j) << "\n";
  }
  out << "End\n";
  return out.str();
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kMarkowitzThreshold = 0.01;
constexpr int kRefactorInterval = 200;
constexpr int kDegenerateStreakLimit = 400;

struct Eta {
  // Product-form update: B_new = B_old * (I + (w - e_r) e_r').
  int slot;
  double pivot;  // w[slot]
  std::vector<std::pair<int, double>> entries;  // w without the slot entry
};

// Sparse LU of the basis with Markowitz pivoting plus an eta file for
// post-factorization updates.
class BasisFactor {
 public:
  // columns[k] = sparse column occupying basis slot k.
  // Returns (slot, row) pairs repaired with row logicals when the submitted
  // basis was singular.
  std::vector<std::pair<int, int>> factorize(
      int m, const std::vector<const SparseVec*>& columns) {
    m_ = m;
    etas_.clear();
    etaNnz_ = 0;
    pivotRow_.assign(m, -1);
    pivotSlot_.assign(m, -1);
    pivotVal_.assign(m, 0.0);
    if (static_cast<int>(lcols_.size()) < m) {
      lcols_.resize(m);
      urows_.resize(m);
    }
    for (int k = 0; k < m; ++k) {
      lcols_[k].clear();
      urows_[k].clear();
    }

    // Working copies of the basis, reused across refactorizations.
    auto& rowsA = rowsABuf_;
    auto& colRows = colRowsBuf_;
    if (static_cast<int>(rowsA.size()) < m) {
      rowsA.resize(m);
      colRows.resize(m);
    }
    for (int k = 0; k < m; ++k) {
      rowsA[k].clear();
      colRows[k].clear();
    }
    for (int slot = 0; slot < m; ++slot) {
      for (const auto& [row, val] : *columns[slot]) {
        if (val == 0.0) continue;
        rowsA[row].push_back({slot, val});
        colRows[slot].push_back(row);
      }
    }
    rowDoneBuf_.assign(m, 0);
    colDoneBuf_.assign(m, 0);
    colCountBuf_.assign(m, 0);
    auto& rowDone = rowDoneBuf_;
    auto& colDone = colDoneBuf_;
    auto& colCount = colCountBuf_;

    // Lazy min-heap of (count, slot); stale entries skipped on pop.
    using Entry = std::pair<int, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    auto pushCol = [&](int slot) {
      colCount[slot] = static_cast<int>(colRows[slot].size());
      heap.push({colCount[slot], slot});
    };
    for (int slot = 0; slot < m; ++slot) pushCol(slot);

    auto compactCol = [&](int slot) {
      auto& rows = colRows[slot];
      rows.erase(std::remove_if(rows.begin(), rows.end(),
                                [&](int r) { return rowDone[r] != 0; }),
                 rows.end());
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      colCount[slot] = static_cast<int>(rows.size());
    };
    auto compactRow = [&](int row) {
      auto& r = rowsA[row];
      r.erase(std::remove_if(r.begin(), r.end(),
                             [&](const auto& e) {
                               return colDone[e.first] || e.second == 0.0;
                             }),
              r.end());
    };
    auto valueAt = [&](int row, int slot) -> double {
      for (const auto& e : rowsA[row])
        if (e.first == slot) return e.second;
      return 0.0;
    };

    workBuf_.assign(m, 0.0);
    markBuf_.assign(m, 0);
    auto& work = workBuf_;
    auto& mark = markBuf_;
    std::vector<std::pair<int, int>> repaired;

    int64_t updateOps = 0;
    for (int step = 0; step < m; ++step) {
      int remaining = m - step;
      // Dense-kernel fallback: sparse elimination goes quadratic once the
      // active submatrix fills in, so finish small/filled kernels densely.
      if (remaining <= 1024 || (updateOps > 20'000'000 && remaining <= 3000)) {
        denseKernel(step, rowsA, colRows, rowDone, colDone, repaired);
        break;
      }
      int bestSlot = -1, bestRow = -1;
      double bestVal = 0.0;
      long bestMerit = -1;
      int examined = 0;
      std::vector<int> requeue;
      while (!heap.empty() && examined < 4) {
        auto [cnt, slot] = heap.top();
        heap.pop();
        if (colDone[slot]) continue;
        compactCol(slot);
        if (colCount[slot] != cnt) {  // stale; requeue with true count
          if (colCount[slot] > 0) heap.push({colCount[slot], slot});
          continue;
        }
        if (colCount[slot] == 0) continue;
        ++examined;
        requeue.push_back(slot);
        double colMax = 0.0;
        std::vector<std::pair<int, double>> active;
        for (int row : colRows[slot]) {
          double v = valueAt(row, slot);
          if (v == 0.0) continue;
          active.push_back({row, v});
          colMax = std::max(colMax, std::abs(v));
        }
        for (const auto& [row, v] : active) {
          if (std::abs(v) < std::max(kPivotTol, kMarkowitzThreshold * colMax))
            continue;
          compactRow(row);
          long merit = static_cast<long>(rowsA[row].size() - 1) *
                       static_cast<long>(active.size() - 1);
          if (bestMerit < 0 || merit < bestMerit ||
              (merit == bestMerit &&
               (std::abs(v) > std::abs(bestVal) ||
                (std::abs(v) == std::abs(bestVal) && slot < bestSlot)))) {
            bestMerit = merit;
            bestSlot = slot;
            bestRow = row;
            bestVal = v;
          }
        }
        if (bestMerit == 0) break;
      }
      for (int slot : requeue)
        if (slot != bestSlot && !colDone[slot] && colCount[slot] > 0)
          heap.push({colCount[slot], slot});

      if (bestSlot < 0) {
        // Singular remainder: pair unpivoted rows with unpivoted slots via
        // row logicals.
        std::vector<int> freeRows, freeSlots;
        for (int i = 0; i < m; ++i)
          if (!rowDone[i]) freeRows.push_back(i);
        for (int j = 0; j < m; ++j)
          if (!colDone[j]) freeSlots.push_back(j);
        assert(freeRows.size() == freeSlots.size());
        for (size_t k = 0; k < freeRows.size(); ++k, ++step) {
          int row = freeRows[k], slot = freeSlots[k];
          repaired.push_back({slot, row});
          pivotRow_[step] = row;
          pivotSlot_[step] = slot;
          pivotVal_[step] = 1.0;
          rowDone[row] = 1;
          colDone[slot] = 1;
        }
        break;
      }

      pivotRow_[step] = bestRow;
      pivotSlot_[step] = bestSlot;
      pivotVal_[step] = bestVal;
      rowDone[bestRow] = 1;
      colDone[bestSlot] = 1;

      compactRow(bestRow);
      for (const auto& [slot, val] : rowsA[bestRow]) {
        if (slot == bestSlot) continue;
        urows_[step].push_back({slot, val});
      }
      compactCol(bestSlot);
      for (int row : colRows[bestSlot]) {
        double v = valueAt(row, bestSlot);
        if (v == 0.0) continue;
        double mult = v / bestVal;
        lcols_[step].push_back({row, mult});
        // row <- row - mult * pivotRow over still-active slots.
        auto& target = rowsA[row];
        for (auto& e : target) {
          if (e.first == bestSlot) {
            e.second = 0.0;
            continue;
          }
          work[e.first] = e.second;
          mark[e.first] = 1;
        }
        updateOps += static_cast<int64_t>(urows_[step].size());
        for (const auto& [slot, uval] : urows_[step]) {
          double delta = -mult * uval;
          if (mark[slot]) {
            work[slot] += delta;
          } else {
            work[slot] = delta;
            mark[slot] = 1;
            target.push_back({slot, 0.0});
            colRows[slot].push_back(row);
            heap.push({++colCount[slot], slot});
          }
        }
        for (auto& e : target) {
          if (mark[e.first]) {
            e.second = work[e.first];
            mark[e.first] = 0;
            work[e.first] = 0.0;
          }
        }
        target.erase(std::remove_if(target.begin(), target.end(),
                                    [](const auto& e) { return e.second == 0.0; }),
                     target.end());
      }
      colRows[bestSlot].clear();
      std::sort(urows_[step].begin(), urows_[step].end());
      std::sort(lcols_[step].begin(), lcols_[step].end());
    }
    updateCount_ = 0;
    baseNnz_ = 0;
    for (int k = 0; k < m_; ++k)
      baseNnz_ += lcols_[k].size() + urows_[k].size() + 1;
    return repaired;
  }

  // Solve B x = a with `a` sparse by row. Caller supplies zeroed dense
  // scratch (workRow) and output (xOut, by slot); both sized m.
  void ftran(const SparseVec& a, std::vector<double>& workRow,
             std::vector<double>& xOut) const {
    for (const auto& [row, val] : a) workRow[row] += val;
    for (int k = 0; k < m_; ++k) {
      double t = workRow[pivotRow_[k]];
      if (t == 0.0) continue;
      for (const auto& [row, mult] : lcols_[k]) workRow[row] -= mult * t;
    }
    for (int k = m_ - 1; k >= 0; --k) {
      double t = workRow[pivotRow_[k]];
      workRow[pivotRow_[k]] = 0.0;
      for (const auto& [slot, val] : urows_[k]) t -= val * xOut[slot];
      xOut[pivotSlot_[k]] = t / pivotVal_[k];
    }
    for (const auto& e : etas_) {
      double t = xOut[e.slot] / e.pivot;
      if (t != 0.0) {
        for (const auto& [slot, w] : e.entries) xOut[slot] -= w * t;
      }
      xOut[e.slot] = t;
    }
  }

  // Solve B'y = c with `c` dense by slot (consumed); y dense by row.
  void btran(std::vector<double>& cSlot, std::vector<double>& yRow) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = 0.0;
      for (const auto& [slot, w] : it->entries) s += w * cSlot[slot];
      cSlot[it->slot] = (cSlot[it->slot] - s) / it->pivot;
    }
    for (int k = 0; k < m_; ++k) {
      double vk = cSlot[pivotSlot_[k]] / pivotVal_[k];
      yRow[pivotRow_[k]] = vk;
      if (vk != 0.0) {
        for (const auto& [slot, val] : urows_[k]) cSlot[slot] -= val * vk;
      }
    }
    for (int k = m_ - 1; k >= 0; --k) {
      double acc = yRow[pivotRow_[k]];
      for (const auto& [row, mult] : lcols_[k]) acc -= mult * yRow[row];
      yRow[pivotRow_[k]] = acc;
    }
  }

  void pushEta(int slot, const std::vector<double>& wSlotDense,
               const std::vector<int>& touched) {
    Eta e;
    e.slot = slot;
    e.pivot = wSlotDense[slot];
    for (int s : touched) {
      if (s == slot) continue;
      double v = wSlotDense[s];
      if (v != 0.0) e.entries.push_back({s, v});
    }
    std::sort(e.entries.begin(), e.entries.end());
    etaNnz_ += e.entries.size() + 1;
    etas_.push_back(std::move(e));
    ++updateCount_;
  }

  // Gathers the remaining active submatrix into dense storage and finishes
  // the factorization with partial pivoting.
  void denseKernel(int step, std::vector<std::vector<std::pair<int, double>>>& rowsA,
                   std::vector<std::vector<int>>& colRows,
                   std::vector<char>& rowDone, std::vector<char>& colDone,
                   std::vector<std::pair<int, int>>& repaired) {
    std::vector<int> rows, slots;
    for (int i = 0; i < m_; ++i)
      if (!rowDone[i]) rows.push_back(i);
    for (int j = 0; j < m_; ++j)
      if (!colDone[j]) slots.push_back(j);
    const int k = static_cast<int>(rows.size());
    if (k == 0) return;
    std::vector<int> rowPos(m_, -1), slotPos(m_, -1);
    for (int i = 0; i < k; ++i) rowPos[rows[i]] = i;
    for (int j = 0; j < k; ++j) slotPos[slots[j]] = j;
    std::vector<double> dense(static_cast<size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i) {
      for (const auto& [slot, val] : rowsA[rows[i]]) {
        if (colDone[slot] || val == 0.0) continue;
        dense[static_cast<size_t>(i) * k + slotPos[slot]] = val;
      }
    }
    std::vector<int> rowOrder(k), colOrder(k);
    for (int i = 0; i < k; ++i) rowOrder[i] = i;
    for (int j = 0; j < k; ++j) colOrder[j] = j;
    int done = 0;
    for (; done < k; ++done) {
      // Partial pivoting over the remaining block.
      int pr = -1, pc = -1;
      double best = 1e-11;
      for (int jj = done; jj < k; ++jj) {
        int j = colOrder[jj];
        for (int ii = done; ii < k; ++ii) {
          int i = rowOrder[ii];
          double v = std::abs(dense[static_cast<size_t>(i) * k + j]);
          if (v > best) {
            best = v;
            pr = ii;
            pc = jj;
          }
        }
        if (pr >= 0) break;  // first usable column keeps fill modest
      }
      if (pr < 0) break;  // singular remainder
      std::swap(rowOrder[done], rowOrder[pr]);
      std::swap(colOrder[done], colOrder[pc]);
      int di = rowOrder[done], dj = colOrder[done];
      double pivot = dense[static_cast<size_t>(di) * k + dj];
      int matRow = rows[di], slot = slots[dj];
      pivotRow_[step] = matRow;
      pivotSlot_[step] = slot;
      pivotVal_[step] = pivot;
      rowDone[matRow] = 1;
      colDone[slot] = 1;
      auto& urow = urows_[step];
      for (int jj = done + 1; jj < k; ++jj) {
        int j = colOrder[jj];
        double v = dense[static_cast<size_t>(di) * k + j];
        if (v != 0.0) urow.push_back({slots[j], v});
      }
      std::sort(urow.begin(), urow.end());
      auto& lcol = lcols_[step];
      for (int ii = done + 1; ii < k; ++ii) {
        int i = rowOrder[ii];
        double v = dense[static_cast<size_t>(i) * k + dj];
        if (v == 0.0) continue;
        double mult = v / pivot;
        lcol.push_back({rows[i], mult});
        double* target = &dense[static_cast<size_t>(i) * k];
        const double* src = &dense[static_cast<size_t>(di) * k];
        for (int jj = done + 1; jj < k; ++jj) {
          int j = colOrder[jj];
          target[j] -= mult * src[j];
        }
        target[dj] = 0.0;
      }
      std::sort(lcol.begin(), lcol.end());
      ++step;
    }
    // Singular remainder after dense elimination: repair with logicals.
    std::vector<int> freeRows, freeSlots;
    for (int i = 0; i < m_; ++i)
      if (!rowDone[i]) freeRows.push_back(i);
    for (int j = 0; j < m_; ++j)
      if (!colDone[j]) freeSlots.push_back(j);
    for (size_t t = 0; t < freeRows.size(); ++t, ++step) {
      repaired.push_back({freeSlots[t], freeRows[t]});
      pivotRow_[step] = freeRows[t];
      pivotSlot_[step] = freeSlots[t];
      pivotVal_[step] = 1.0;
      rowDone[freeRows[t]] = 1;
      colDone[freeSlots[t]] = 1;
    }
    (void)colRows;
  }

  bool needsRefactor() const {
    return updateCount_ >= kRefactorInterval ||
           etaNnz_ > std::max<size_t>(4 * baseNnz_, 50'000);
  }

 private:
  int m_ = 0;
  std::vector<int> pivotRow_, pivotSlot_;
  std::vector<double> pivotVal_;
  std::vector<std::vector<std::pair<int, double>>> lcols_, urows_;
  std::vector<Eta> etas_;
  size_t etaNnz_ = 0;
  size_t baseNnz_ = 0;
  int updateCount_ = 0;
  // Reused factorization workspaces.
  std::vector<std::vector<std::pair<int, double>>> rowsABuf_;
  std::vector<std::vector<int>> colRowsBuf_;
  std::vector<char> rowDoneBuf_, colDoneBuf_;
  std::vector<int> colCountBuf_;
  std::vector<double> workBuf_;
  std::vector<char> markBuf_;
};

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const LPSolveOptions& opts)
      : lp_(lp), opts_(opts) {
    n_ = lp.numVariables();
    m_ = lp.numRows();
    total_ = n_ + m_;
    buildColumns();
  }

  LPSolution solve(const Basis* warm) {
    initBasis(warm);
    factorize();
    computeBasicValues();

    LPStatus status = LPStatus::Optimal;
    int64_t iter = 0;
    int degenerateStreak = 0;
    bool bland = false;
    pricingCursor_ = 0;
    std::vector<double> cSlot(m_, 0.0);
    rebuildViolations();
    bool phase1 = infeasSum_ > feasTol_;
    rebuildCostCache(phase1);

    while (true) {
      if (iter >= opts_.maxPivots) {
        status = LPStatus::IterationLimit;
        break;
      }
      bool nowPhase1 = infeasSum_ > feasTol_;
      if (nowPhase1 != phase1) {
        phase1 = nowPhase1;
        rebuildCostCache(phase1);
      }

      std::copy(cSlotCache_.begin(), cSlotCache_.end(), cSlot.begin());
      factor_.btran(cSlot, y_);

      double dj = 0.0;
      int entering = priceEntering(phase1, bland, &dj);
      if (entering < 0) {
        status = phase1 ? LPStatus::Infeasible : LPStatus::Optimal;
        break;
      }
      int dir = dj < 0 ? +1 : -1;

      factor_.ftran(columnOf(entering), xWork_, wSlot_);
      touched_.clear();
      for (int k = 0; k < m_; ++k)
        if (wSlot_[k] != 0.0) touched_.push_back(k);

      double limit = kInfinity;
      int leavingSlot = -1;
      int leavingBound = 0;
      double enterRange = upper(entering) - lower(entering);
      bool boundFlip = std::isfinite(enterRange);
      if (boundFlip) limit = enterRange;

      for (int k : touched_) {
        double w = wSlot_[k];
        if (std::abs(w) < kPivotTol) continue;
        int col = basicIndex_[k];
        double x = xB_[k];
        double rate = -static_cast<double>(dir) * w;
        double lo = lower(col), up = upper(col);
        double cand = kInfinity;
        int bound = 0;
        if (phase1 && x < lo - feasTol_) {
          if (rate > 0) { cand = (lo - x) / rate; bound = 0; }
        } else if (phase1 && x > up + feasTol_) {
          if (rate < 0) { cand = (up - x) / rate; bound = 1; }
        } else if (rate > 0) {
          if (std::isfinite(up)) { cand = (up - x) / rate; bound = 1; }
        } else {
          if (std::isfinite(lo)) { cand = (lo - x) / rate; bound = 0; }
        }
        if (!std::isfinite(cand)) continue;
        if (cand < 0) cand = 0.0;
        bool better = false;
        if (cand < limit - 1e-12) {
          better = true;
        } else if (cand <= limit + 1e-12 && leavingSlot >= 0) {
          better = bland ? (k < leavingSlot)
                         : (std::abs(w) > std::abs(wSlot_[leavingSlot]));
        }
        if (better) {
          limit = std::min(limit, cand);
          leavingSlot = k;
          leavingBound = bound;
          boundFlip = false;
        }
      }

      if (leavingSlot < 0) {
        if (boundFlip) {
          for (int k : touched_) xB_[k] -= dir * wSlot_[k] * limit;
          status_[entering] = (status_[entering] == Basis::AtLower)
                                  ? Basis::AtUpper
                                  : Basis::AtLower;
          for (int k : touched_) refreshSlot(k, phase1);
          ++iter;
          continue;
        }
        status = phase1 ? LPStatus::Infeasible : LPStatus::Unbounded;
        break;
      }

      if (limit <= 1e-12) {
        if (++degenerateStreak > kDegenerateStreakLimit) bland = true;
      } else {
        degenerateStreak = 0;
        bland = false;
      }

      int leavingCol = basicIndex_[leavingSlot];
      for (int k : touched_) xB_[k] -= dir * wSlot_[k] * limit;
      double enterValue = nonbasicValue(entering) + dir * limit;
      status_[leavingCol] =
          leavingBound == 0 ? Basis::AtLower : Basis::AtUpper;
      status_[entering] = Basis::Basic;
      basicIndex_[leavingSlot] = entering;
      xB_[leavingSlot] = enterValue;
      factor_.pushEta(leavingSlot, wSlot_, touched_);
      for (int k : touched_) refreshSlot(k, phase1);
      refreshSlot(leavingSlot, phase1);
      ++iter;

      if (factor_.needsRefactor()) {
        factorize();
        computeBasicValues();
        rebuildViolations();
        bool p1 = infeasSum_ > feasTol_;
        phase1 = p1;
        rebuildCostCache(phase1);
      }
    }

    return extract(status, iter);
  }

 private:
  const LinearProgram& lp_;
  LPSolveOptions opts_;
  int n_ = 0, m_ = 0, total_ = 0;
  double feasTol_ = tol::feasibility;

  std::vector<SparseVec> colCache_;
  std::vector<uint8_t> status_;
  std::vector<int> basicIndex_;
  std::vector<double> xB_;
  std::vector<double> y_;
  std::vector<double> xWork_, wSlot_;
  std::vector<int> touched_;
  std::vector<double> violation_;
  std::vector<double> cSlotCache_;
  double infeasSum_ = 0.0;
  BasisFactor factor_;
  int pricingCursor_ = 0;

  void buildColumns() {
    colCache_.assign(total_, {});
    for (int i = 0; i < m_; ++i) {
      for (const auto& [col, val] : lp_.row(i).coeffs) {
        if (val != 0.0) colCache_[col].push_back({i, val});
      }
    }
    for (int i = 0; i < m_; ++i) colCache_[n_ + i] = {{i, 1.0}};
  }

  const SparseVec& columnOf(int col) const { return colCache_[col]; }

  double lower(int col) const {
    if (col < n_) return lp_.variable(col).lower;
    switch (lp_.row(col - n_).sense) {
      case RowSense::LessEqual: return 0.0;
      case RowSense::Equal: return 0.0;
      case RowSense::GreaterEqual: return -kInfinity;
    }
    return 0.0;
  }
  double upper(int col) const {
    if (col < n_) return lp_.variable(col).upper;
    switch (lp_.row(col - n_).sense) {
      case RowSense::LessEqual: return kInfinity;
      case RowSense::Equal: return 0.0;
      case RowSense::GreaterEqual: return 0.0;
    }
    return 0.0;
  }
  double cost(int col) const {
    return col < n_ ? lp_.variable(col).objective : 0.0;
  }

  double nonbasicValue(int col) const {
    if (status_[col] == Basis::AtLower) {
      double lo = lower(col);
      return std::isfinite(lo) ? lo : 0.0;
    }
    if (status_[col] == Basis::AtUpper) {
      double up = upper(col);
      return std::isfinite(up) ? up : 0.0;
    }
    return 0.0;
  }

  void initBasis(const Basis* warm) {
    status_.assign(total_, Basis::AtLower);
    for (int j = 0; j < total_; ++j) {
      if (!std::isfinite(lower(j)) && std::isfinite(upper(j)))
        status_[j] = Basis::AtUpper;
    }
    if (warm && !warm->empty()) {
      int ns = std::min<int>(n_, static_cast<int>(warm->structState.size()));
      for (int j = 0; j < ns; ++j) status_[j] = warm->structState[j];
      int nl = std::min<int>(m_, static_cast<int>(warm->logicalState.size()));
      for (int i = 0; i < nl; ++i) status_[n_ + i] = warm->logicalState[i];
      for (int i = nl; i < m_; ++i) status_[n_ + i] = Basis::Basic;
    } else {
      for (int i = 0; i < m_; ++i) status_[n_ + i] = Basis::Basic;
    }
    int basicCount = 0;
    for (int j = 0; j < total_; ++j)
      if (status_[j] == Basis::Basic) ++basicCount;
    if (basicCount > m_) {
      for (int j = total_ - 1; j >= 0 && basicCount > m_; --j) {
        if (status_[j] != Basis::Basic) continue;
        status_[j] = std::isfinite(lower(j)) ? Basis::AtLower
                     : std::isfinite(upper(j)) ? Basis::AtUpper
                                               : Basis::AtLower;
        --basicCount;
      }
    } else if (basicCount < m_) {
      for (int i = 0; i < m_ && basicCount < m_; ++i) {
        if (status_[n_ + i] != Basis::Basic) {
          status_[n_ + i] = Basis::Basic;
          ++basicCount;
        }
      }
    }
    basicIndex_.clear();
    for (int j = 0; j < total_; ++j)
      if (status_[j] == Basis::Basic) basicIndex_.push_back(j);
    xB_.assign(m_, 0.0);
    y_.assign(m_, 0.0);
    xWork_.assign(m_, 0.0);
    wSlot_.assign(m_, 0.0);
  }

  void factorize() {
    std::vector<const SparseVec*> cols(m_);
    // Repairs swap singular columns for row logicals; the LU recorded during
    // a repairing pass mixes old and new columns, so refactorize until clean.
    while (true) {
      for (int k = 0; k < m_; ++k) cols[k] = &columnOf(basicIndex_[k]);
      auto repaired = factor_.factorize(m_, cols);
      if (repaired.empty()) break;
      for (const auto& [slot, row] : repaired) {
        int old = basicIndex_[slot];
        status_[old] = std::isfinite(lower(old)) ? Basis::AtLower
                       : std::isfinite(upper(old)) ? Basis::AtUpper
                                                   : Basis::AtLower;
        status_[n_ + row] = Basis::Basic;
        basicIndex_[slot] = n_ + row;
      }
    }
  }

  void computeBasicValues() {
    std::vector<double> rhs(m_, 0.0);
    for (int i = 0; i < m_; ++i) rhs[i] = lp_.row(i).rhs;
    for (int j = 0; j < total_; ++j) {
      if (status_[j] == Basis::Basic) continue;
      double v = nonbasicValue(j);
      if (v == 0.0) continue;
      for (const auto& [row, val] : columnOf(j)) rhs[row] -= val * v;
    }
    SparseVec rhsSparse;
    for (int i = 0; i < m_; ++i)
      if (rhs[i] != 0.0) rhsSparse.push_back({i, rhs[i]});
    factor_.ftran(rhsSparse, xWork_, wSlot_);
    for (int k = 0; k < m_; ++k) xB_[k] = wSlot_[k];
  }

  double violationOf(int slot) const {
    int col = basicIndex_[slot];
    double x = xB_[slot];
    double lo = lower(col), up = upper(col);
    if (x < lo - feasTol_) return x - lo;  // negative = below
    if (x > up + feasTol_) return x - up;  // positive = above
    return 0.0;
  }

  void rebuildViolations() {
    violation_.assign(m_, 0.0);
    infeasSum_ = 0.0;
    for (int k = 0; k < m_; ++k) {
      violation_[k] = violationOf(k);
      infeasSum_ += std::abs(violation_[k]);
    }
  }

  void rebuildCostCache(bool phase1) {
    cSlotCache_.assign(m_, 0.0);
    for (int k = 0; k < m_; ++k) {
      cSlotCache_[k] = phase1 ? (violation_[k] < 0   ? -1.0
                                 : violation_[k] > 0 ? 1.0
                                                     : 0.0)
                              : cost(basicIndex_[k]);
    }
  }

  // Re-evaluates one slot's violation and phase cost after a pivot.
  void refreshSlot(int slot, bool phase1) {
    double v = violationOf(slot);
    infeasSum_ += std::abs(v) - std::abs(violation_[slot]);
    violation_[slot] = v;
    cSlotCache_[slot] = phase1 ? (v < 0 ? -1.0 : v > 0 ? 1.0 : 0.0)
                               : cost(basicIndex_[slot]);
    if (infeasSum_ < 0) infeasSum_ = 0;
  }

  double reducedCostOf(int col, bool phase1) const {
    double c = phase1 ? 0.0 : cost(col);
    double dot = 0.0;
    for (const auto& [row, val] : columnOf(col)) dot += y_[row] * val;
    return c - dot;
  }

  bool improves(int col, bool phase1, double* djOut) const {
    if (status_[col] == Basis::Basic) return false;
    double lo = lower(col), up = upper(col);
    if (lo == up) return false;
    double dj = reducedCostOf(col, phase1);
    *djOut = dj;
    double dTol = tol::reducedCost * (1.0 + std::abs(cost(col)));
    if (status_[col] == Basis::AtLower) {
      if (dj < -dTol) return true;
      if (!std::isfinite(lo) && dj > dTol) return true;  // free, can decrease
      return false;
    }
    if (status_[col] == Basis::AtUpper) return dj > dTol;
    return false;
  }

  int priceEntering(bool phase1, bool bland, double* djOut) {
    double dj = 0.0;
    if (bland) {
      for (int j = 0; j < total_; ++j) {
        if (improves(j, phase1, &dj)) {
          *djOut = dj;
          return j;
        }
      }
      return -1;
    }
    const int blockSize = std::max(512, total_ / 16);
    int best = -1;
    double bestScore = 0.0, bestDj = 0.0;
    int j = pricingCursor_ % total_;
    int scanned = 0;
    while (scanned < total_) {
      int end = std::min(total_, j + blockSize);
      for (; j < end; ++j, ++scanned) {
        if (improves(j, phase1, &dj)) {
          double score = std::abs(dj);
          if (score > bestScore) {
            bestScore = score;
            best = j;
            bestDj = dj;
          }
        }
      }
      if (best >= 0) break;
      if (j >= total_) j = 0;
    }
    if (best >= 0) {
      pricingCursor_ = best + 1;
      *djOut = bestDj;
    }
    return best;
  }

  LPSolution extract(LPStatus status, int64_t iterations) {
    LPSolution sol;
    sol.status = status;
    sol.iterations = iterations;
    sol.primal.assign(n_, 0.0);
    sol.dual.assign(m_, 0.0);
    sol.reducedCost.assign(n_, 0.0);

    std::vector<double> x(total_, 0.0);
    for (int j = 0; j < total_; ++j)
      if (status_[j] != Basis::Basic) x[j] = nonbasicValue(j);
    for (int k = 0; k < m_; ++k) x[basicIndex_[k]] = xB_[k];
    for (int j = 0; j < n_; ++j) sol.primal[j] = x[j];

    std::vector<double> cSlot(m_, 0.0);
    for (int k = 0; k < m_; ++k) cSlot[k] = cost(basicIndex_[k]);
    std::fill(y_.begin(), y_.end(), 0.0);
    factor_.btran(cSlot, y_);
    for (int i = 0; i < m_; ++i) sol.dual[i] = y_[i];

    double obj = 0.0;
    for (int j = 0; j < n_; ++j)
      obj += lp_.variable(j).objective * sol.primal[j];
    sol.objective = obj;

    for (int j = 0; j < n_; ++j) {
      double dot = 0.0;
      for (const auto& [row, val] : columnOf(j)) dot += y_[row] * val;
      sol.reducedCost[j] = lp_.variable(j).objective - dot;
    }

    if (status == LPStatus::Optimal) {
      double dualObj = 0.0;
      for (int i = 0; i < m_; ++i) dualObj += sol.dual[i] * lp_.row(i).rhs;
      for (int j = 0; j < total_; ++j) {
        if (status_[j] == Basis::Basic) continue;
        double c = cost(j);
        double dot = 0.0;
        for (const auto& [row, val] : columnOf(j)) dot += y_[row] * val;
        dualObj += (c - dot) * x[j];
      }
      sol.dualityResidual = std::abs(obj - dualObj);
    }

    sol.basis.structState.assign(status_.begin(), status_.begin() + n_);
    sol.basis.logicalState.assign(status_.begin() + n_, status_.end());
    return sol;
  }
};

}  // namespace

LPSolution solveLP(const LinearProgram& lp, const Basis* warmStart,
                   const LPSolveOptions& options) {
  Simplex simplex(lp, options);
  return simplex.solve(warmStart);
}

FarkasRay extractFarkasRay(const LinearProgram& lp) {
  LinearProgram slacked;
  for (int j = 0; j < lp.numVariables(); ++j) {
    const auto& v = lp.variable(j);
    slacked.addVariable(v.lower, v.upper, 0.0, false, v.name);
  }
  for (int i = 0; i < lp.numRows(); ++i) {
    const auto& r = lp.row(i);
    SparseVec coeffs = r.coeffs;
    switch (r.sense) {
      case RowSense::LessEqual: {
        int s = slacked.addVariable(0.0, kInfinity, 1.0);
        coeffs.push_back({s, -1.0});
        break;
      }
      case RowSense::GreaterEqual: {
        int s = slacked.addVariable(0.0, kInfinity, 1.0);
        coeffs.push_back({s, 1.0});
        break;
      }
      case RowSense::Equal: {
        int sp = slacked.addVariable(0.0, kInfinity, 1.0);
        int sm = slacked.addVariable(0.0, kInfinity, 1.0);
        coeffs.push_back({sp, 1.0});
        coeffs.push_back({sm, -1.0});
        break;
      }
    }
    slacked.addRow(r.sense, r.rhs, std::move(coeffs), r.name);
  }
  LPSolution sol = solveLP(slacked);
  if (sol.status != LPStatus::Optimal || sol.objective <= tol::feasibility) {
    throw std::logic_error(
        "extractFarkasRay: LP is feasible (phase-1 optimum ~ 0)");
  }
  FarkasRay ray;
  ray.dual = sol.dual;
  double value = 0.0;
  for (int i = 0; i < lp.numRows(); ++i) value += ray.dual[i] * lp.row(i).rhs;
  std::vector<double> colDot(lp.numVariables(), 0.0);
  for (int i = 0; i < lp.numRows(); ++i) {
    for (const auto& [col, v] : lp.row(i).coeffs)
      colDot[col] += ray.dual[i] * v;
  }
  for (int j = 0; j < lp.numVariables(); ++j) {
    double d = colDot[j];
    if (std::abs(d) < 1e-11) continue;
    const auto& v = lp.variable(j);
    value -= d > 0 ? d * v.upper : d * v.lower;
  }
  ray.value = value;
  return ray;
}

}  // namespace bdtt
