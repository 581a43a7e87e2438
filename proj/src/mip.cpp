#include "bdtt/mip.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <queue>
#include <vector>

namespace bdtt {

namespace {

struct Node {
  double bound;
  int64_t id;
  std::vector<std::pair<int, std::pair<double, double>>> fixings;  // var -> (lo, hi)
  Basis basis;
};

struct NodeOrder {
  bool operator()(const std::shared_ptr<Node>& a,
                  const std::shared_ptr<Node>& b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    return a->id > b->id;
  }
};

double fractionality(double v) {
  double f = v - std::floor(v);
  return std::min(f, 1.0 - f);
}

}  // namespace

MIPResult solveMIPReference(const LinearProgram& lp, const MIPOptions& options) {
  auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  };

  MIPResult result;
  LinearProgram work = lp;  // bounds are mutated per node and restored

  std::vector<int> intVars;
  for (int j = 0; j < lp.numVariables(); ++j)
    if (lp.variable(j).integral) intVars.push_back(j);

  std::priority_queue<std::shared_ptr<Node>, std::vector<std::shared_ptr<Node>>,
                      NodeOrder>
      open;
  auto root = std::make_shared<Node>();
  root->bound = -kInfinity;
  root->id = 0;
  if (options.rootBasis) root->basis = *options.rootBasis;
  open.push(root);

  double incumbentObj = kInfinity;
  std::vector<double> incumbent;
  int64_t nextId = 1;
  int64_t nodes = 0;
  bool hitTime = false, hitNodes = false;

  auto gapClosed = [&](double bestBound) {
    if (incumbentObj == kInfinity) return false;
    double gap = incumbentObj - bestBound;
    return gap <= options.gapTolerance * (1.0 + std::abs(incumbentObj)) + 1e-9;
  };

  double bestBound = -kInfinity;
  while (!open.empty()) {
    if (elapsed() > options.timeLimitSeconds) { hitTime = true; break; }
    if (options.nodeLimit >= 0 && nodes >= options.nodeLimit) {
      hitNodes = true;
      break;
    }
    auto node = open.top();
    bestBound = std::isfinite(node->bound) ? node->bound : bestBound;
    if (gapClosed(node->bound)) break;
    open.pop();
    if (node->bound >= incumbentObj - 1e-9 * (1.0 + std::abs(incumbentObj)) &&
        std::isfinite(node->bound) && incumbentObj != kInfinity) {
      continue;  // fathomed by bound
    }
    ++nodes;

    // Apply node bounds.
    std::vector<std::pair<int, std::pair<double, double>>> saved;
    saved.reserve(node->fixings.size());
    for (const auto& [j, bounds] : node->fixings) {
      saved.push_back({j, {work.variable(j).lower, work.variable(j).upper}});
      work.setBounds(j, bounds.first, bounds.second);
    }
    LPSolution sol = solveLP(work, node->basis.empty() ? nullptr : &node->basis);
    for (auto it = saved.rbegin(); it != saved.rend(); ++it)
      work.setBounds(it->first, it->second.first, it->second.second);

    if (sol.status == LPStatus::Infeasible) continue;
    if (sol.status == LPStatus::Unbounded) {
      // Integer bounds are required to be finite, so an unbounded relaxation
      // means the continuous part is unbounded; report as such via bound.
      result.bound = -kInfinity;
      continue;
    }
    if (sol.status == LPStatus::IterationLimit) continue;

    double nodeObj = sol.objective;
    if (incumbentObj != kInfinity &&
        nodeObj >= incumbentObj - 1e-9 * (1.0 + std::abs(incumbentObj)))
      continue;

    // Most fractional integer variable, lowest index on ties.
    int branchVar = -1;
    double branchFrac = tol::integrality;
    for (int j : intVars) {
      double f = fractionality(sol.primal[j]);
      if (f > branchFrac + 1e-12) {
        branchFrac = f;
        branchVar = j;
      }
    }
    if (branchVar < 0) {
      // Integral solution.
      if (nodeObj < incumbentObj) {
        incumbentObj = nodeObj;
        incumbent = sol.primal;
        for (int j : intVars) incumbent[j] = std::round(incumbent[j]);
      }
      continue;
    }

    double v = sol.primal[branchVar];
    double lo = work.variable(branchVar).lower;
    double hi = work.variable(branchVar).upper;
    for (const auto& [j, bounds] : node->fixings) {
      if (j == branchVar) { lo = bounds.first; hi = bounds.second; }
    }
    auto down = std::make_shared<Node>();
    down->bound = nodeObj;
    down->id = nextId++;
    down->fixings = node->fixings;
    down->fixings.push_back({branchVar, {lo, std::floor(v)}});
    down->basis = sol.basis;
    auto up = std::make_shared<Node>();
    up->bound = nodeObj;
    up->id = nextId++;
    up->fixings = node->fixings;
    up->fixings.push_back({branchVar, {std::ceil(v), hi}});
    up->basis = sol.basis;
    open.push(down);
    open.push(up);
  }

  if (open.empty()) bestBound = incumbentObj;
  else if (!open.empty()) bestBound = std::max(bestBound, open.top()->bound);

  result.nodeCount = nodes;
  result.elapsedSeconds = elapsed();
  result.hasIncumbent = incumbentObj != kInfinity;
  if (result.hasIncumbent) {
    result.values = incumbent;
    result.objective = incumbentObj;
    result.bound = std::min(bestBound, incumbentObj);
    if (hitTime) result.status = MIPStatus::TimeLimit;
    else if (hitNodes) result.status = MIPStatus::NodeLimit;
    else result.status = MIPStatus::Optimal;
  } else {
    result.bound = bestBound;
    if (hitTime) result.status = MIPStatus::TimeLimit;
    else if (hitNodes) result.status = MIPStatus::NodeLimit;
    else result.status = MIPStatus::Infeasible;
  }
  return result;
}

}  // namespace bdtt
