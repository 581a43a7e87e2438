#include "bdtt/formulation.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bdtt {

ShiftPlan ShiftPlan::diagonal(const Instance& inst) {
  ShiftPlan plan;
  plan.resize(inst.line.stationCount, inst.horizon.horizonLength,
              inst.params.maxShift);
  for (int u = 0; u < inst.line.stationCount - 1; ++u) {
    for (int v = u + 1; v < inst.line.stationCount; ++v) {
      int pair = inst.demand.pairIndex(u, v);
      for (int t = 0; t < inst.horizon.horizonLength; ++t) {
        int64_t d = inst.demand.freeAt(u, v, t);
        if (d != 0) plan.set(pair, t, t, d);
      }
    }
  }
  return plan;
}

void departureEnvelope(const Instance& inst, std::vector<int>& lo,
                       std::vector<int>& hi) {
  const int I = inst.params.trainCount;
  const int T = inst.horizon.horizonLength;
  const int hmin = inst.params.headwayMin;
  lo.resize(I);
  hi.resize(I);
  for (int i = 0; i < I; ++i) {
    lo[i] = 1 + i * hmin;
    hi[i] = (T - 1) - (I - 1 - i) * hmin;
  }
}

BigMProfile looseBigM(const Instance& inst) {
  BigMProfile m;
  m.mode = BigMProfile::Mode::Loose;
  m.stations = inst.line.stationCount;
  m.horizon = inst.horizon.horizonLength;
  m.global = static_cast<double>(
      std::max<int64_t>(1, inst.demand.totalFree() + inst.demand.totalReserved()));
  return m;
}

BigMProfile tightenBigM(const Instance& inst) {
  BigMProfile m;
  m.mode = BigMProfile::Mode::Tightened;
  const int S = inst.line.stationCount;
  const int T = inst.horizon.horizonLength;
  const int I = inst.params.trainCount;
  const int iota = inst.params.maxShift;
  m.stations = S;
  m.horizon = T;
  m.global = static_cast<double>(
      std::max<int64_t>(1, inst.demand.totalFree() + inst.demand.totalReserved()));
  m.detention.assign(S, 0.0);
  m.arrivals.assign(static_cast<size_t>(S) * T, 0.0);
  m.arrivalsOD.assign(static_cast<size_t>(DemandProfile::pairCount(S)) * T, 0.0);

  for (int u = 0; u < S - 1; ++u) {
    double mu = 0.0;
    for (int v = u + 1; v < S; ++v) {
      // rho_uv without the train index: the safe choice is the minimum over
      // trains, keeping M_u a valid detention bound.
      double rho = 1.0;
      for (int i = 0; i < I; ++i)
        rho = std::min(rho, inst.params.fairnessAt(i, u, v, S));
      int pair = inst.demand.pairIndex(u, v);
      for (int t = 0; t < T; ++t) {
        mu += (1.0 - rho) * static_cast<double>(inst.demand.freeAt(u, v, t));
        double window = 0.0;
        for (int tp = t; tp <= std::min(T - 1, t + iota); ++tp)
          window += static_cast<double>(inst.demand.freeAt(u, v, tp));
        m.arrivalsOD[static_cast<size_t>(pair) * T + t] = window;
        m.arrivals[static_cast<size_t>(u) * T + t] += window;
      }
    }
    m.detention[u] = mu;
  }
  return m;
}

double computeSubsidy(const Instance& inst, const ShiftPlan& kappa) {
  const int S = inst.line.stationCount;
  const int T = inst.horizon.horizonLength;
  const double phi = inst.params.farePaidFraction;
  double total = 0.0;
  for (int u = 0; u < S - 1; ++u) {
    for (int v = u + 1; v < S; ++v) {
      int pair = inst.demand.pairIndex(u, v);
      double fare = inst.fares.at(u, v);
      for (int o = 0; o < T; ++o) {
        int64_t demand = inst.demand.freeAt(u, v, o);
        int64_t diag = kappa.at(pair, o, o);
        int64_t shifted = 0;
        for (int a = std::max(0, o - kappa.maxShift); a < o; ++a)
          shifted += kappa.at(pair, a, o);
        if (shifted + diag != demand ||
            (!inst.horizon.isPeak(o) && shifted != 0)) {
          std::ostringstream msg;
          msg << "computeSubsidy: conservation violated at (u,v,o)=(" << u + 1
              << "," << v + 1 << "," << o + 1 << ")";
          throw std::invalid_argument(msg.str());
        }
        total += fare * (static_cast<double>(demand) -
                         (phi * static_cast<double>(shifted) +
                          static_cast<double>(diag)));
      }
    }
  }
  return total;
}

namespace {

enum class Kind { Monolithic, RMP, Subproblem, Strengthened, Pricing };

struct LinExpr {
  double constant = 0.0;
  SparseVec terms;
  void add(int col, double coeff) {
    if (col >= 0 && coeff != 0.0) terms.push_back({col, coeff});
  }
};

class Assembler {
 public:
  Assembler(const Instance& inst, const ObjectiveWeights& w,
            const BigMProfile& bigM, Kind kind, const BuildOptions& options)
      : inst_(inst), w_(w), M_(bigM), kind_(kind), opt_(options) {
    S_ = inst.line.stationCount;
    T_ = inst.horizon.horizonLength;
    I_ = inst.params.trainCount;
    iota_ = opt_.shiftDisabled ? 0 : inst.params.maxShift;
    P_ = DemandProfile::pairCount(S_);
    wantFlow_ = kind_ != Kind::RMP;
    wantWaitLin_ = kind_ == Kind::Monolithic || kind_ == Kind::RMP ||
                   kind_ == Kind::Pricing;
    wantPw_ = kind_ == Kind::Monolithic || kind_ == Kind::Pricing;
    wantSubsidy_ = kind_ == Kind::Monolithic || kind_ == Kind::RMP;
    wantTimetableRows_ = kind_ == Kind::Monolithic || kind_ == Kind::RMP ||
                         kind_ == Kind::Pricing;
    wantConservation_ = kind_ != Kind::Subproblem;
    integral_ = options.integerFlags;
  }

  BuiltModel build() {
    computeShape();
    makeVariables();
    makeRows();
    return {std::move(lp_), std::move(cat_)};
  }

  std::vector<int> pinRowZ_, pinRowKappa_;

 private:
  const Instance& inst_;
  ObjectiveWeights w_;
  const BigMProfile& M_;
  Kind kind_;
  BuildOptions opt_;
  int S_, T_, I_, iota_, P_;
  bool wantFlow_, wantWaitLin_, wantPw_, wantSubsidy_, wantTimetableRows_,
      wantConservation_, integral_;

  LinearProgram lp_;
  VariableCatalog cat_;

  std::vector<int64_t> freeTotal_, resTotal_;   // per pair
  std::vector<double> resStation_;              // R^_ut, per (u,t)
  std::vector<double> kConst_;                  // const part of K, per (pair,t)
  std::vector<char> kHasVar_;                   // K has kappa-variable terms
  std::vector<double> aConst_;                  // A const from var-less pairs
  std::vector<char> aHasVar_;

  bool envelopeEmpty_ = false;

  int zc(int i, int t) const { return cat_.z[static_cast<size_t>(i) * T_ + t]; }
  int8_t zf(int i, int t) const {
    return cat_.zFix[static_cast<size_t>(i) * T_ + t];
  }
  // z class: 0 fixed-0, 1 fixed-1, 2 free
  int zClass(int i, int t) const {
    if (t < cat_.depLo[i]) return 1;
    if (t >= cat_.depHi[i] + 1) return 0;
    return 2;
  }
  LinExpr zExpr(int i, int t) const {
    LinExpr e;
    int cls = zClass(i, t);
    if (cls == 2) e.add(zc(i, t), 1.0);
    else e.constant = cls;
    return e;
  }
  // x_it = z_it - z_{i-1,t}
  LinExpr xRawExpr(int i, int t) const {
    LinExpr e = zExpr(i, t);
    if (i > 0) {
      LinExpr prev = zExpr(i - 1, t);
      e.constant -= prev.constant;
      for (auto& [c, v] : prev.terms) e.add(c, -v);
    }
    return e;
  }
  bool xIsConst(int i, int t) const {
    return cat_.x[static_cast<size_t>(i) * T_ + t] < 0;
  }
  double xConst(int i, int t) const {
    return cat_.xFix[static_cast<size_t>(i) * T_ + t];
  }
  int xCol(int i, int t) const {
    return cat_.x[static_cast<size_t>(i) * T_ + t];
  }
  LinExpr xExpr(int i, int t) const {
    LinExpr e;
    if (xIsConst(i, t)) e.constant = xConst(i, t);
    else e.add(xCol(i, t), 1.0);
    return e;
  }
  LinExpr arrivalODExpr(int pair, int t) const {
    LinExpr e;
    int col = cat_.arrivalOD[static_cast<size_t>(pair) * T_ + t];
    if (col >= 0) e.add(col, 1.0);
    else e.constant = kConst_[static_cast<size_t>(pair) * T_ + t];
    return e;
  }
  LinExpr arrivalStationExpr(int u, int t) const {
    LinExpr e;
    int col = cat_.arrivalStation[static_cast<size_t>(u) * T_ + t];
    if (col >= 0) {
      e.add(col, 1.0);
      return e;
    }
    double c = 0.0;
    for (int v = u + 1; v < S_; ++v)
      c += kConst_[static_cast<size_t>(cat_.pairIndex(u, v)) * T_ + t];
    e.constant = c;
    return e;
  }
  double rho(int i, int u, int v) const {
    return inst_.params.fairnessAt(i, u, v, S_);
  }

  void addDefRowExpr(int definedCol, RowSense sense, LinExpr lhs, double rhs,
                     std::string name) {
    cat_.definitionRows.push_back({lp_.numRows(), definedCol});
    addRowExpr(sense, std::move(lhs), rhs, std::move(name));
  }

  void addRowExpr(RowSense sense, LinExpr lhs, double rhs, std::string name) {
    // lhs.constant moves to the right-hand side; duplicate columns (e.g. the
    // diagonal theta pairs, where both factors are the same x) are merged.
    auto& terms = lhs.terms;
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    size_t out = 0;
    for (size_t k = 0; k < terms.size(); ++k) {
      if (out > 0 && terms[out - 1].first == terms[k].first) {
        terms[out - 1].second += terms[k].second;
      } else {
        terms[out++] = terms[k];
      }
    }
    terms.resize(out);
    terms.erase(std::remove_if(terms.begin(), terms.end(),
                               [](const auto& e) { return e.second == 0.0; }),
                terms.end());
    lp_.addRow(sense, rhs - lhs.constant, std::move(terms), std::move(name));
  }

  void computeShape() {
    cat_.stations = S_;
    cat_.horizon = T_;
    cat_.trains = I_;
    cat_.maxShift = iota_;
    cat_.pairs = P_;
    departureEnvelope(inst_, cat_.depLo, cat_.depHi);
    if (opt_.fixedTimetable) {
      const auto& dep = opt_.fixedTimetable->departureIndex;
      for (int i = 0; i < I_; ++i) {
        cat_.depLo[i] = dep[i];
        cat_.depHi[i] = dep[i];
      }
    }
    for (int i = 0; i < I_; ++i)
      if (cat_.depLo[i] > cat_.depHi[i]) envelopeEmpty_ = true;

    freeTotal_.assign(P_, 0);
    resTotal_.assign(P_, 0);
    resStation_.assign(static_cast<size_t>(S_) * T_, 0.0);
    kConst_.assign(static_cast<size_t>(P_) * T_, 0.0);
    kHasVar_.assign(static_cast<size_t>(P_) * T_, 0);
    aConst_.assign(static_cast<size_t>(S_) * T_, 0.0);
    aHasVar_.assign(static_cast<size_t>(S_) * T_, 0);
    for (int u = 0; u < S_ - 1; ++u) {
      for (int v = u + 1; v < S_; ++v) {
        int pair = cat_.pairIndex(u, v);
        for (int t = 0; t < T_; ++t) {
          int64_t df = inst_.demand.freeAt(u, v, t);
          int64_t dr = inst_.demand.reservedAt(u, v, t);
          freeTotal_[pair] += df;
          resTotal_[pair] += dr;
          resStation_[static_cast<size_t>(u) * T_ + t] +=
              static_cast<double>(dr);
        }
        for (int t = 0; t < T_; ++t) {
          bool shiftable = !opt_.shiftDisabled;
          double cpart = 0.0;
          bool hasVar = false;
          if (!shiftable) {
            cpart = static_cast<double>(inst_.demand.freeAt(u, v, t));
          } else {
            if (!inst_.horizon.isPeak(t))
              cpart = static_cast<double>(inst_.demand.freeAt(u, v, t));
            for (int o = t; o <= std::min(T_ - 1, t + iota_); ++o) {
              if (inst_.horizon.isPeak(o) && inst_.demand.freeAt(u, v, o) > 0) {
                hasVar = true;
                break;
              }
            }
          }
          kConst_[static_cast<size_t>(pair) * T_ + t] = cpart;
          kHasVar_[static_cast<size_t>(pair) * T_ + t] = hasVar ? 1 : 0;
          if (hasVar) aHasVar_[static_cast<size_t>(u) * T_ + t] = 1;
        }
      }
    }
    for (int u = 0; u < S_ - 1; ++u) {
      for (int t = 0; t < T_; ++t) {
        double c = 0.0;
        for (int v = u + 1; v < S_; ++v) {
          int pair = cat_.pairIndex(u, v);
          if (!kHasVar_[static_cast<size_t>(pair) * T_ + t])
            c += kConst_[static_cast<size_t>(pair) * T_ + t];
        }
        aConst_[static_cast<size_t>(u) * T_ + t] = c;
      }
    }
  }

  std::string idx(int a) const { return std::to_string(a); }
  std::string idx(int a, int b) const {
    return std::to_string(a) + "_" + std::to_string(b);
  }
  std::string idx(int a, int b, int c) const {
    return idx(a, b) + "_" + std::to_string(c);
  }
  std::string idx(int a, int b, int c, int d) const {
    return idx(a, b, c) + "_" + std::to_string(d);
  }

  void makeVariables() {
    const size_t IT = static_cast<size_t>(I_) * T_;
    cat_.z.assign(IT, -1);
    cat_.zFix.assign(IT, 0);
    cat_.x.assign(IT, -1);
    cat_.xFix.assign(IT, 0);
    cat_.dep.assign(I_, -1);
    cat_.headway.assign(I_, -1);

    // z columns over the free departure window; fixed cells become 0/1.
    for (int i = 0; i < I_; ++i) {
      for (int t = 0; t < T_; ++t) {
        int cls = zClass(i, t);
        size_t at = static_cast<size_t>(i) * T_ + t;
        if (cls == 2) {
          int col = lp_.addVariable(0.0, 1.0, 0.0, integral_, "z_" + idx(i, t));
          cat_.z[at] = col;
          cat_.freeZ.push_back({i, t});
          cat_.freeZCol.push_back(col);
        } else {
          cat_.zFix[at] = static_cast<int8_t>(cls);
        }
      }
    }
    // x columns wherever x is non-constant.
    for (int i = 0; i < I_; ++i) {
      for (int t = 0; t < T_; ++t) {
        LinExpr e = xRawExpr(i, t);
        size_t at = static_cast<size_t>(i) * T_ + t;
        if (e.terms.empty()) {
          cat_.xFix[at] = static_cast<int8_t>(std::lround(e.constant));
        } else {
          cat_.x[at] =
              lp_.addVariable(0.0, 1.0, 0.0, integral_, "x_" + idx(i, t));
        }
      }
    }
    if (wantTimetableRows_) {
      for (int i = 0; i < I_; ++i) {
        cat_.dep[i] = lp_.addVariable(cat_.depLo[i], cat_.depHi[i], 0.0,
                                      integral_, "dep_" + idx(i));
        double hLo = i == 0 ? 1.0 : inst_.params.headwayMin;
        double hHi = i == 0 ? T_ - 1.0 : inst_.params.headwayMax;
        cat_.headway[i] =
            lp_.addVariable(hLo, hHi, 0.0, integral_, "h_" + idx(i));
      }
    }

    // kappa variables: peak origins with demand, arrivals within the
    // shift-earlier window.
    size_t kappaSlots = static_cast<size_t>(P_) * T_ * (iota_ + 1);
    cat_.kappaVarIndex.assign(kappaSlots, -1);
    if (!opt_.shiftDisabled) {
      for (int u = 0; u < S_ - 1; ++u) {
        for (int v = u + 1; v < S_; ++v) {
          int pair = cat_.pairIndex(u, v);
          for (int o = 0; o < T_; ++o) {
            if (!inst_.horizon.isPeak(o)) continue;
            if (inst_.demand.freeAt(u, v, o) <= 0) continue;
            for (int a = std::max(0, o - iota_); a <= o; ++a) {
              int col = lp_.addVariable(
                  0.0, static_cast<double>(inst_.demand.freeAt(u, v, o)), 0.0,
                  integral_, "k_" + idx(u, v, a, o));
              cat_.kappaVarIndex[(static_cast<size_t>(pair) * T_ + o) *
                                     (iota_ + 1) +
                                 (o - a)] =
                  static_cast<int>(cat_.kappaVars.size());
              cat_.kappaVars.push_back({pair, o, a});
              cat_.kappaCol.push_back(col);
            }
          }
        }
      }
    }

    // Arrival aggregates.
    cat_.arrivalOD.assign(static_cast<size_t>(P_) * T_, -1);
    cat_.arrivalODConst = kConst_;
    cat_.arrivalStation.assign(static_cast<size_t>(S_) * T_, -1);
    for (int u = 0; u < S_ - 1; ++u) {
      for (int v = u + 1; v < S_; ++v) {
        int pair = cat_.pairIndex(u, v);
        for (int t = 0; t < T_; ++t) {
          if (kHasVar_[static_cast<size_t>(pair) * T_ + t]) {
            cat_.arrivalOD[static_cast<size_t>(pair) * T_ + t] =
                lp_.addVariable(0.0, kInfinity, 0.0, integral_,
                                "arr_" + idx(u, v, t));
          }
        }
      }
    }
    for (int u = 0; u < S_ - 1; ++u) {
      for (int t = 0; t < T_; ++t) {
        if (aHasVar_[static_cast<size_t>(u) * T_ + t]) {
          cat_.arrivalStation[static_cast<size_t>(u) * T_ + t] = lp_.addVariable(
              0.0, kInfinity, 0.0, integral_, "arrS_" + idx(u, t));
        }
      }
    }

    if (wantSubsidy_) {
      cat_.subsidy =
          lp_.addVariable(0.0, kInfinity, w_.subsidy, false, "subsidy");
    }

    // Reserved boarding and loads.
    cat_.boardHat.assign(static_cast<size_t>(I_) * P_, -1);
    cat_.onboardHat.assign(static_cast<size_t>(I_) * S_, -1);
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u < S_ - 1; ++u) {
        for (int v = u + 1; v < S_; ++v) {
          int pair = cat_.pairIndex(u, v);
          if (resTotal_[pair] <= 0) continue;
          cat_.boardHat[static_cast<size_t>(i) * P_ + pair] = lp_.addVariable(
              0.0, kInfinity, 0.0, integral_, "bhat_" + idx(i, u, v));
        }
      }
      for (int u = 0; u < S_ - 1; ++u) {
        bool any = false;
        for (int m = 0; m <= u && !any; ++m)
          for (int v = u + 1; v < S_ && !any; ++v)
            if (resTotal_[cat_.pairIndex(m, v)] > 0) any = true;
        if (any) {
          cat_.onboardHat[static_cast<size_t>(i) * S_ + u] = lp_.addVariable(
              0.0, kInfinity, 0.0, integral_, "ohat_" + idx(i, u));
        }
      }
    }

    if (wantWaitLin_) makeWaitingVariables();
    if (wantFlow_) makeFlowVariables();

    if (kind_ == Kind::RMP) {
      cat_.thetaSP = lp_.addVariable(0.0, kInfinity, 1.0, false, "thetaSP");
    }
  }

  void makeWaitingVariables() {
    const int hmax = inst_.params.headwayMax;
    cat_.theta.assign(I_, {});
    for (int i = 0; i < I_; ++i) {
      int tMax = cat_.depHi[i] - 1;
      int tpMin = i >= 1 ? cat_.depLo[i - 1] : 0;
      int band = i >= 1 ? hmax - 1 : T_;
      for (int t = tpMin; t <= tMax; ++t) {
        if (xIsConst(i, t) && xConst(i, t) == 0) continue;
        for (int tp = std::max(tpMin, t - band); tp <= t; ++tp) {
          if (xIsConst(i, tp) && xConst(i, tp) == 0) continue;
          VariableCatalog::ThetaEntry e;
          e.t = t;
          e.tp = tp;
          if (xIsConst(i, t) && xIsConst(i, tp)) {
            e.col = -1;
            e.fix = 1;  // both constants are 1 here
          } else {
            e.col = lp_.addVariable(0.0, 1.0, 0.0, integral_,
                                    "th_" + idx(i, t, tp));
            e.fix = -1;
          }
          cat_.theta[i].push_back(e);
        }
      }
    }
    // mu aligned with theta entries.
    cat_.mu.assign(static_cast<size_t>(I_) * S_, {});
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u < S_ - 1; ++u) {
        auto& list = cat_.mu[static_cast<size_t>(i) * S_ + u];
        list.assign(cat_.theta[i].size(), -1);
        for (size_t k = 0; k < cat_.theta[i].size(); ++k) {
          const auto& e = cat_.theta[i][k];
          bool aVar = aHasVar_[static_cast<size_t>(u) * T_ + e.tp] != 0;
          double aC = aConst_[static_cast<size_t>(u) * T_ + e.tp];
          if (!aVar && aC == 0.0) continue;  // no arrivals, mu absent
          if (e.fix == 1) {
            list[k] = -2;  // equals the A expression
          } else if (aVar) {
            list[k] = lp_.addVariable(0.0, M_.mUT(u, e.tp), 0.0, integral_,
                                      "mu_" + idx(i, u, e.t, e.tp));
          } else {
            list[k] = -3;  // theta * const
          }
        }
      }
    }
    // Cumulative waits and reserved per-arrival waits.
    size_t IST = static_cast<size_t>(I_) * S_ * T_;
    cat_.pHatW.assign(IST, -1);
    cat_.pHatWc.assign(IST, -1);
    cat_.pwc.assign(IST, -1);
    if (wantPw_) cat_.pw.assign(IST, -1);
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u < S_ - 1; ++u) {
        for (int t = 0; t < T_; ++t) {
          size_t at = (static_cast<size_t>(i) * S_ + u) * T_ + t;
          double rhat = resStation_[static_cast<size_t>(u) * T_ + t];
          bool xZero = xIsConst(i, t) && xConst(i, t) == 0;
          if (rhat > 0 && !xZero) {
            if (!(xIsConst(i, t))) {
              cat_.pHatW[at] = lp_.addVariable(0.0, rhat, 0.0, integral_,
                                               "phw_" + idx(i, u, t));
            }
            // x fixed at 1 makes p^w_hat a constant; no variable needed.
          }
          if (wantPw_ && !xZero) {
            bool aVar = aHasVar_[static_cast<size_t>(u) * T_ + t] != 0;
            double aC = aConst_[static_cast<size_t>(u) * T_ + t];
            if (aVar || aC > 0) {
              cat_.pw[at] = lp_.addVariable(0.0, M_.mUT(u, t), 0.0, integral_,
                                            "pw_" + idx(i, u, t));
            }
          }
        }
        // Cumulative variables only where a contribution exists.
        for (size_t k = 0; k < cat_.theta[i].size(); ++k) {
          const auto& e = cat_.theta[i][k];
          size_t at = (static_cast<size_t>(i) * S_ + u) * T_ + e.t;
          if (resStation_[static_cast<size_t>(u) * T_ + e.tp] > 0 &&
              cat_.pHatWc[at] < 0) {
            cat_.pHatWc[at] = lp_.addVariable(0.0, kInfinity, w_.waiting, false,
                                              "phwc_" + idx(i, u, e.t));
          }
          if (cat_.mu[static_cast<size_t>(i) * S_ + u][k] != -1 &&
              cat_.pwc[at] < 0) {
            cat_.pwc[at] = lp_.addVariable(0.0, kInfinity, w_.waiting, false,
                                           "pwc_" + idx(i, u, e.t));
          }
        }
      }
    }
    if (integral_) {
      // Counts are integral at integral (z, kappa, b); flag them to match.
      for (size_t at = 0; at < cat_.pHatWc.size(); ++at) {
        if (cat_.pHatWc[at] >= 0) lp_.variable(cat_.pHatWc[at]).integral = true;
        if (cat_.pwc[at] >= 0) lp_.variable(cat_.pwc[at]).integral = true;
      }
    }
  }

  void makeFlowVariables() {
    size_t IP = static_cast<size_t>(I_) * P_;
    size_t IS = static_cast<size_t>(I_) * S_;
    cat_.board.assign(IP, -1);
    cat_.wait.assign(IP, -1);
    cat_.detain.assign(IP, -1);
    cat_.onboard.assign(IS, -1);
    cat_.alight.assign(IS, -1);
    cat_.gamma.assign(IP, {});
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u < S_ - 1; ++u) {
        for (int v = u + 1; v < S_; ++v) {
          int pair = cat_.pairIndex(u, v);
          if (freeTotal_[pair] <= 0) continue;
          size_t at = static_cast<size_t>(i) * P_ + pair;
          cat_.board[at] = lp_.addVariable(0.0, kInfinity, 0.0, integral_,
                                           "b_" + idx(i, u, v));
          cat_.wait[at] = lp_.addVariable(0.0, kInfinity, 0.0, integral_,
                                          "w_" + idx(i, u, v));
          cat_.detain[at] = lp_.addVariable(0.0, kInfinity, 0.0, integral_,
                                            "r_" + idx(i, u, v));
          auto& gl = cat_.gamma[at];
          for (int t = 0; t < T_; ++t) {
            if (zClass(i, t) != 2) continue;
            if (!kHasVar_[static_cast<size_t>(pair) * T_ + t]) continue;
            gl.push_back({t, lp_.addVariable(0.0, M_.mUVT(pair, t), 0.0,
                                             integral_,
                                             "G_" + idx(i, u, v, t))});
          }
        }
      }
      for (int u = 0; u + 1 < S_; ++u) {
        cat_.onboard[static_cast<size_t>(i) * S_ + u] = lp_.addVariable(
            0.0, kInfinity, 0.0, integral_, "o_" + idx(i, u));
      }
      for (int u = 1; u < S_; ++u) {
        cat_.alight[static_cast<size_t>(i) * S_ + u] = lp_.addVariable(
            0.0, kInfinity, 0.0, integral_, "l_" + idx(i, u));
      }
    }
    // Detention-time terms q.
    cat_.q.assign(static_cast<size_t>(I_) * S_ * T_, -1);
    double qWeight = kind_ == Kind::Subproblem || kind_ == Kind::Strengthened ||
                             kind_ == Kind::Monolithic || kind_ == Kind::Pricing
                         ? w_.waiting
                         : 0.0;
    if (kind_ == Kind::Pricing) qWeight = w_.waiting;
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u < S_ - 1; ++u) {
        bool anyFree = false;
        for (int v = u + 1; v < S_ && !anyFree; ++v)
          if (freeTotal_[cat_.pairIndex(u, v)] > 0) anyFree = true;
        if (!anyFree) continue;
        for (int t = 0; t < T_; ++t) {
          if (xIsConst(i, t) && xConst(i, t) == 0) continue;
          cat_.q[(static_cast<size_t>(i) * S_ + u) * T_ + t] = lp_.addVariable(
              0.0, M_.mU(u), 0.0, false, "q_" + idx(i, u, t));
        }
      }
    }
    for (size_t at = 0; at < cat_.q.size(); ++at) {
      if (cat_.q[at] >= 0) {
        lp_.variable(cat_.q[at]).objective = qWeight;
        if (integral_) lp_.variable(cat_.q[at]).integral = true;
      }
    }
    if (slackMode_) {
      cat_.slackService.assign(P_, -1);
      cat_.slackCapacity.assign(IS, -1);
      for (int p = 0; p < P_; ++p) {
        if (freeTotal_[p] > 0)
          cat_.slackService[p] =
              lp_.addVariable(0.0, kInfinity, 1.0, false, "sServ_" + idx(p));
      }
      for (int i = 0; i < I_; ++i) {
        for (int u = 0; u + 1 < S_; ++u) {
          cat_.slackCapacity[static_cast<size_t>(i) * S_ + u] = lp_.addVariable(
              0.0, kInfinity, 1.0, false, "sCap_" + idx(i, u));
        }
      }
    }
  }

 public:
  bool slackMode_ = false;

 private:
  void makeRows() {
    if (envelopeEmpty_) {
      lp_.addRow(RowSense::Equal, 1.0, {}, "infeasible_envelope");
      return;
    }
    if (wantSubsidy_) addSubsidyRow();
    if (wantTimetableRows_) addTimetableRows();
    if (wantConservation_ && !opt_.shiftDisabled) addConservationRows();
    addArrivalRows();
    addXDefRows();
    addReservedRows();
    if (wantWaitLin_) addWaitingRows();
    if (wantFlow_) addFlowRows();
    if (kind_ == Kind::RMP) addReservedCapacityRows();
    if (kind_ == Kind::Subproblem) addPinningRows();
  }

  void addSubsidyRow() {
    // F^s = sum over (u,v,o) of fare * (D - phi*shifted - unshifted).
    LinExpr e;
    e.add(cat_.subsidy, 1.0);
    double rhs = 0.0;
    const double phi = inst_.params.farePaidFraction;
    for (size_t k = 0; k < cat_.kappaVars.size(); ++k) {
      const auto& kv = cat_.kappaVars[k];
      int u, v;
      unpair(kv.pair, u, v);
      double fare = inst_.fares.at(u, v);
      double coeff = kv.arrival == kv.origin ? fare : fare * phi;
      e.add(cat_.kappaCol[k], coeff);
    }
    if (!opt_.shiftDisabled) {
      for (int u = 0; u < S_ - 1; ++u)
        for (int v = u + 1; v < S_; ++v)
          for (int o = 0; o < T_; ++o)
            if (inst_.horizon.isPeak(o))
              rhs += inst_.fares.at(u, v) *
                     static_cast<double>(inst_.demand.freeAt(u, v, o));
    }
    addDefRowExpr(cat_.subsidy, RowSense::Equal, std::move(e), rhs,
                  "def_subsidy");
  }

  void addTimetableRows() {
    // z monotone over the free window.
    for (int i = 0; i < I_; ++i) {
      for (int t = cat_.depLo[i]; t + 1 <= cat_.depHi[i]; ++t) {
        if (zClass(i, t) != 2 || zClass(i, t + 1) != 2) continue;
        lp_.addRow(RowSense::LessEqual, 0.0,
                   {{zc(i, t + 1), 1.0}, {zc(i, t), -1.0}},
                   "mono_" + idx(i, t));
      }
      // dep_i = count of ones = fixed-1 cells + free z sum.
      LinExpr e;
      e.add(cat_.dep[i], 1.0);
      double fixedOnes = cat_.depLo[i];
      for (int t = cat_.depLo[i]; t <= std::min(cat_.depHi[i], T_ - 1); ++t) {
        if (zClass(i, t) == 2) e.add(zc(i, t), -1.0);
      }
      addDefRowExpr(cat_.dep[i], RowSense::Equal, std::move(e), fixedOnes,
                    "def_dep_" + idx(i));
      LinExpr h;
      h.add(cat_.headway[i], 1.0);
      h.add(cat_.dep[i], -1.0);
      if (i > 0) h.add(cat_.dep[i - 1], 1.0);
      addDefRowExpr(cat_.headway[i], RowSense::Equal, std::move(h), 0.0,
                    "def_h_" + idx(i));
    }
  }

  void addConservationRows() {
    for (size_t k = 0; k < cat_.kappaVars.size();) {
      const auto& kv = cat_.kappaVars[k];
      int pair = kv.pair, o = kv.origin;
      LinExpr e;
      size_t j = k;
      while (j < cat_.kappaVars.size() && cat_.kappaVars[j].pair == pair &&
             cat_.kappaVars[j].origin == o) {
        e.add(cat_.kappaCol[j], 1.0);
        ++j;
      }
      int u, v;
      unpair(pair, u, v);
      addRowExpr(RowSense::Equal, std::move(e),
                 static_cast<double>(inst_.demand.freeAt(u, v, o)),
                 "conserve_" + idx(u, v, o));
      k = j;
    }
  }

  void addArrivalRows() {
    for (int u = 0; u < S_ - 1; ++u) {
      for (int v = u + 1; v < S_; ++v) {
        int pair = cat_.pairIndex(u, v);
        for (int t = 0; t < T_; ++t) {
          int col = cat_.arrivalOD[static_cast<size_t>(pair) * T_ + t];
          if (col < 0) continue;
          LinExpr e;
          e.add(col, 1.0);
          for (int o = t; o <= std::min(T_ - 1, t + iota_); ++o) {
            int kIdx = cat_.kappaIndexOf(pair, t, o);
            if (kIdx >= 0) e.add(cat_.kappaCol[kIdx], -1.0);
          }
          addDefRowExpr(col, RowSense::Equal, std::move(e),
                        kConst_[static_cast<size_t>(pair) * T_ + t],
                        "def_arr_" + idx(u, v, t));
        }
      }
    }
    for (int u = 0; u < S_ - 1; ++u) {
      for (int t = 0; t < T_; ++t) {
        int col = cat_.arrivalStation[static_cast<size_t>(u) * T_ + t];
        if (col < 0) continue;
        LinExpr e;
        e.add(col, 1.0);
        double rhs = aConst_[static_cast<size_t>(u) * T_ + t];
        for (int v = u + 1; v < S_; ++v) {
          int pair = cat_.pairIndex(u, v);
          int kcol = cat_.arrivalOD[static_cast<size_t>(pair) * T_ + t];
          if (kcol >= 0) e.add(kcol, -1.0);
        }
        addDefRowExpr(col, RowSense::Equal, std::move(e), rhs,
                      "def_arrS_" + idx(u, t));
      }
    }
  }

  void addXDefRows() {
    for (int i = 0; i < I_; ++i) {
      for (int t = 0; t < T_; ++t) {
        int col = xCol(i, t);
        if (col < 0) continue;
        LinExpr e;
        e.add(col, 1.0);
        LinExpr raw = xRawExpr(i, t);
        for (auto& [c, v] : raw.terms) e.add(c, -v);
        addDefRowExpr(col, RowSense::Equal, std::move(e), raw.constant,
                      "def_x_" + idx(i, t));
      }
    }
  }

  void addReservedRows() {
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u < S_ - 1; ++u) {
        for (int v = u + 1; v < S_; ++v) {
          int pair = cat_.pairIndex(u, v);
          int col = cat_.boardHat[static_cast<size_t>(i) * P_ + pair];
          if (col < 0) continue;
          LinExpr e;
          e.add(col, 1.0);
          double rhs = 0.0;
          for (int t = 0; t < T_; ++t) {
            int64_t d = inst_.demand.reservedAt(u, v, t);
            if (d == 0) continue;
            LinExpr xe = xExpr(i, t);
            rhs += static_cast<double>(d) * xe.constant;
            for (auto& [c, cv] : xe.terms)
              e.add(c, -static_cast<double>(d) * cv);
          }
          addDefRowExpr(col, RowSense::Equal, std::move(e), rhs,
                        "def_bhat_" + idx(i, u, v));
        }
        int ocol = cat_.onboardHat[static_cast<size_t>(i) * S_ + u];
        if (ocol < 0) continue;
        LinExpr e;
        e.add(ocol, 1.0);
        for (int m = 0; m <= u; ++m) {
          for (int v = u + 1; v < S_; ++v) {
            int c = cat_.boardHat[static_cast<size_t>(i) * P_ +
                                  cat_.pairIndex(m, v)];
            if (c >= 0) e.add(c, -1.0);
          }
        }
        addDefRowExpr(ocol, RowSense::Equal, std::move(e), 0.0,
                      "def_ohat_" + idx(i, u));
      }
    }
  }

  void addBigMProduct(int prodCol, const LinExpr& indicator,
                      const LinExpr& amount, double bigM,
                      const std::string& tag) {
    // prod = indicator * amount with indicator binary, 0 <= amount <= bigM:
    //   prod <= bigM * indicator
    //   prod <= amount
    //   prod >= amount - bigM * (1 - indicator)
    {
      LinExpr e;
      e.add(prodCol, 1.0);
      e.constant -= bigM * indicator.constant;
      for (auto& [c, v] : indicator.terms) e.add(c, -bigM * v);
      addRowExpr(RowSense::LessEqual, std::move(e), 0.0, tag + "_ub");
    }
    {
      LinExpr e;
      e.add(prodCol, 1.0);
      e.constant -= amount.constant;
      for (auto& [c, v] : amount.terms) e.add(c, -v);
      addRowExpr(RowSense::LessEqual, std::move(e), 0.0, tag + "_le");
    }
    {
      // prod - amount + bigM - bigM * indicator >= 0
      LinExpr e;
      e.add(prodCol, 1.0);
      e.constant -= amount.constant;
      for (auto& [c, v] : amount.terms) e.add(c, -v);
      e.constant += bigM * (1.0 - indicator.constant);
      for (auto& [c, v] : indicator.terms) e.add(c, -bigM * v);
      addRowExpr(RowSense::GreaterEqual, std::move(e), 0.0, tag + "_lb");
    }
  }

  void addWaitingRows() {
    // theta = x_it * x_itp.
    for (int i = 0; i < I_; ++i) {
      for (const auto& e : cat_.theta[i]) {
        if (e.col < 0) continue;
        LinExpr xt = xExpr(i, e.t);
        LinExpr xp = xExpr(i, e.tp);
        if (!xt.terms.empty()) {
          LinExpr r;
          r.add(e.col, 1.0);
          for (auto& [c, v] : xt.terms) r.add(c, -v);
          addRowExpr(RowSense::LessEqual, std::move(r), xt.constant,
                     "th_le1_" + idx(i, e.t, e.tp));
        }
        if (!xp.terms.empty()) {
          LinExpr r;
          r.add(e.col, 1.0);
          for (auto& [c, v] : xp.terms) r.add(c, -v);
          addRowExpr(RowSense::LessEqual, std::move(r), xp.constant,
                     "th_le2_" + idx(i, e.t, e.tp));
        }
        LinExpr r;
        r.add(e.col, 1.0);
        double rhsConst = -1.0 + xt.constant + xp.constant;
        for (auto& [c, v] : xt.terms) r.add(c, -v);
        for (auto& [c, v] : xp.terms) r.add(c, -v);
        addRowExpr(RowSense::GreaterEqual, std::move(r), rhsConst,
                   "th_lb_" + idx(i, e.t, e.tp));
      }
    }
    // p^w_hat = x * reserved arrivals (constant data).
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u < S_ - 1; ++u) {
        for (int t = 0; t < T_; ++t) {
          size_t at = (static_cast<size_t>(i) * S_ + u) * T_ + t;
          int col = cat_.pHatW[at];
          if (col < 0) continue;
          double rhat = resStation_[static_cast<size_t>(u) * T_ + t];
          LinExpr e;
          e.add(col, 1.0);
          e.add(xCol(i, t), -rhat);
          addDefRowExpr(col, RowSense::Equal, std::move(e), 0.0,
                        "def_phw_" + idx(i, u, t));
        }
      }
    }
    // p^w = x * station arrivals (monolithic reporting block).
    if (wantPw_) {
      for (int i = 0; i < I_; ++i) {
        for (int u = 0; u < S_ - 1; ++u) {
          for (int t = 0; t < T_; ++t) {
            size_t at = (static_cast<size_t>(i) * S_ + u) * T_ + t;
            int col = cat_.pw[at];
            if (col < 0) continue;
            LinExpr amount = arrivalStationExpr(u, t);
            LinExpr xe = xExpr(i, t);
            if (xe.terms.empty()) {
              // x == 1 here; p^w equals the arrival total.
              LinExpr e;
              e.add(col, 1.0);
              e.constant -= amount.constant;
              for (auto& [c, v] : amount.terms) e.add(c, -v);
              addDefRowExpr(col, RowSense::Equal, std::move(e), 0.0,
                            "def_pw_" + idx(i, u, t));
            } else if (amount.terms.empty()) {
              LinExpr e;
              e.add(col, 1.0);
              for (auto& [c, v] : xe.terms) e.add(c, -amount.constant * v);
              addDefRowExpr(col, RowSense::Equal, std::move(e),
                            amount.constant * xe.constant,
                            "def_pw_" + idx(i, u, t));
            } else {
              addBigMProduct(col, xe, amount, M_.mUT(u, t),
                             "pw_" + idx(i, u, t));
            }
          }
        }
      }
    }
    // mu = theta * station arrivals; p^wc = sum over tp<=t of mu.
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u < S_ - 1; ++u) {
        const auto& mus = cat_.mu[static_cast<size_t>(i) * S_ + u];
        for (size_t k = 0; k < cat_.theta[i].size(); ++k) {
          int mcol = mus[k];
          if (mcol < 0) continue;
          const auto& e = cat_.theta[i][k];
          LinExpr thetaE;
          thetaE.add(e.col, 1.0);
          addBigMProduct(mcol, thetaE, arrivalStationExpr(u, e.tp),
                         M_.mUT(u, e.tp), "mu_" + idx(i, u, e.t, e.tp));
        }
      }
    }
    // Cumulative definitions.
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u < S_ - 1; ++u) {
        const auto& mus = cat_.mu[static_cast<size_t>(i) * S_ + u];
        // Group theta entries by t (they are emitted sorted by t).
        size_t k = 0;
        while (k < cat_.theta[i].size()) {
          int t = cat_.theta[i][k].t;
          size_t end = k;
          while (end < cat_.theta[i].size() && cat_.theta[i][end].t == t) ++end;
          size_t atT = (static_cast<size_t>(i) * S_ + u) * T_ + t;
          // Reserved cumulative.
          if (cat_.pHatWc[atT] >= 0) {
            LinExpr e;
            e.add(cat_.pHatWc[atT], 1.0);
            double rhs = 0.0;
            for (size_t j = k; j < end; ++j) {
              const auto& te = cat_.theta[i][j];
              double rhat = resStation_[static_cast<size_t>(u) * T_ + te.tp];
              if (rhat <= 0) continue;
              if (te.col >= 0) e.add(te.col, -rhat);
              else rhs += rhat;
            }
            addDefRowExpr(cat_.pHatWc[atT], RowSense::Equal, std::move(e),
                          rhs, "def_phwc_" + idx(i, u, t));
          }
          // Non-reserved cumulative.
          if (cat_.pwc[atT] >= 0) {
            LinExpr e;
            e.add(cat_.pwc[atT], 1.0);
            double rhs = 0.0;
            for (size_t j = k; j < end; ++j) {
              const auto& te = cat_.theta[i][j];
              int mcol = mus[j];
              if (mcol == -1) continue;
              if (mcol >= 0) {
                e.add(mcol, -1.0);
              } else if (mcol == -2) {
                LinExpr a = arrivalStationExpr(u, te.tp);
                rhs += a.constant;
                for (auto& [c, v] : a.terms) e.add(c, -v);
              } else {  // -3: theta * constant arrivals
                double aC = aConst_[static_cast<size_t>(u) * T_ + te.tp];
                e.add(te.col, -aC);
              }
            }
            addDefRowExpr(cat_.pwc[atT], RowSense::Equal, std::move(e), rhs,
                          "def_pwc_" + idx(i, u, t));
          }
          k = end;
        }
      }
    }
  }

  void addFlowRows() {
    // Gamma = z * OD arrivals, and waiting ledger w.
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u < S_ - 1; ++u) {
        for (int v = u + 1; v < S_; ++v) {
          int pair = cat_.pairIndex(u, v);
          size_t at = static_cast<size_t>(i) * P_ + pair;
          if (cat_.board[at] < 0) continue;
          for (const auto& g : cat_.gamma[at]) {
            LinExpr ze;
            ze.add(zc(i, g.t), 1.0);
            addBigMProduct(g.col, ze, arrivalODExpr(pair, g.t),
                           M_.mUVT(pair, g.t), "G_" + idx(i, u, v, g.t));
          }
          // w = sum of arrivals strictly before dep_i, minus already boarded.
          LinExpr e;
          e.add(cat_.wait[at], 1.0);
          double rhs = 0.0;
          for (int t = 0; t < T_; ++t) {
            int cls = zClass(i, t);
            if (cls == 0) continue;
            if (cls == 1) {
              LinExpr a = arrivalODExpr(pair, t);
              rhs += a.constant;
              for (auto& [c, v] : a.terms) e.add(c, -v);
            } else if (kHasVar_[static_cast<size_t>(pair) * T_ + t]) {
              // free z with variable arrivals: Gamma variable exists
              for (const auto& g : cat_.gamma[at]) {
                if (g.t == t) { e.add(g.col, -1.0); break; }
              }
            } else {
              double kc = kConst_[static_cast<size_t>(pair) * T_ + t];
              if (kc > 0) e.add(zc(i, t), -kc);  // Gamma = const * z, exact
            }
          }
          for (int j = 0; j < i; ++j)
            e.add(cat_.board[static_cast<size_t>(j) * P_ + pair], 1.0);
          addDefRowExpr(cat_.wait[at], RowSense::Equal, std::move(e), rhs,
                        "def_w_" + idx(i, u, v));

          // Fairness bounds and detention ledger.
          double fr = rho(i, u, v);
          if (fr > 0.0) {
            lp_.addRow(RowSense::GreaterEqual, 0.0,
                       {{cat_.board[at], 1.0}, {cat_.wait[at], -fr}},
                       "fair_lo_" + idx(i, u, v));
          }
          lp_.addRow(RowSense::LessEqual, 0.0,
                     {{cat_.board[at], 1.0}, {cat_.wait[at], -1.0}},
                     "board_le_wait_" + idx(i, u, v));
          cat_.definitionRows.push_back({lp_.numRows(), cat_.detain[at]});
          lp_.addRow(RowSense::Equal, 0.0,
                     {{cat_.detain[at], 1.0},
                      {cat_.wait[at], -1.0},
                      {cat_.board[at], 1.0}},
                     "def_r_" + idx(i, u, v));
        }
      }
    }
    // Full service.
    for (int u = 0; u < S_ - 1; ++u) {
      for (int v = u + 1; v < S_; ++v) {
        int pair = cat_.pairIndex(u, v);
        if (freeTotal_[pair] <= 0) continue;
        LinExpr e;
        for (int i = 0; i < I_; ++i)
          e.add(cat_.board[static_cast<size_t>(i) * P_ + pair], 1.0);
        SparseVec coeffs = e.terms;
        if (slackMode_) coeffs.push_back({cat_.slackService[pair], 1.0});
        lp_.addRow(RowSense::Equal, static_cast<double>(freeTotal_[pair]),
                   std::move(coeffs), "serve_" + idx(u, v));
      }
    }
    // Loads: alight, onboard flow, capacity.
    for (int i = 0; i < I_; ++i) {
      for (int u = 1; u < S_; ++u) {
        int lcol = cat_.alight[static_cast<size_t>(i) * S_ + u];
        LinExpr e;
        e.add(lcol, 1.0);
        for (int m = 0; m < u; ++m) {
          int c = cat_.board[static_cast<size_t>(i) * P_ + cat_.pairIndex(m, u)];
          if (c >= 0) e.add(c, -1.0);
        }
        addDefRowExpr(lcol, RowSense::Equal, std::move(e), 0.0,
                      "def_l_" + idx(i, u));
      }
      for (int u = 0; u + 1 < S_; ++u) {
        int ocol = cat_.onboard[static_cast<size_t>(i) * S_ + u];
        LinExpr e;
        e.add(ocol, 1.0);
        if (u > 0) {
          e.add(cat_.onboard[static_cast<size_t>(i) * S_ + u - 1], -1.0);
          e.add(cat_.alight[static_cast<size_t>(i) * S_ + u], 1.0);
        }
        for (int v = u + 1; v < S_; ++v) {
          int c = cat_.board[static_cast<size_t>(i) * P_ + cat_.pairIndex(u, v)];
          if (c >= 0) e.add(c, -1.0);
        }
        addDefRowExpr(ocol, RowSense::Equal, std::move(e), 0.0,
                      "def_o_" + idx(i, u));
      }
      if (!opt_.relaxCapacity) {
        for (int u = 0; u + 1 < S_; ++u) {
          LinExpr e;
          e.add(cat_.onboard[static_cast<size_t>(i) * S_ + u], 1.0);
          int oh = cat_.onboardHat[static_cast<size_t>(i) * S_ + u];
          if (oh >= 0) e.add(oh, 1.0);
          if (slackMode_)
            e.add(cat_.slackCapacity[static_cast<size_t>(i) * S_ + u], -1.0);
          addRowExpr(RowSense::LessEqual, std::move(e),
                     static_cast<double>(inst_.params.capacity),
                     "cap_" + idx(i, u));
        }
      }
    }
    // q = x * detained-at-station sum.
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u < S_ - 1; ++u) {
        for (int t = 0; t < T_; ++t) {
          int col = cat_.q[(static_cast<size_t>(i) * S_ + u) * T_ + t];
          if (col < 0) continue;
          LinExpr amount;
          for (int v = u + 1; v < S_; ++v) {
            int c =
                cat_.detain[static_cast<size_t>(i) * P_ + cat_.pairIndex(u, v)];
            if (c >= 0) amount.add(c, 1.0);
          }
          LinExpr xe = xExpr(i, t);
          if (xe.terms.empty()) {
            LinExpr e;
            e.add(col, 1.0);
            for (auto& [c, v] : amount.terms) e.add(c, -v);
            addDefRowExpr(col, RowSense::Equal, std::move(e), 0.0,
                          "def_q_" + idx(i, u, t));
          } else {
            addBigMProduct(col, xe, amount, M_.mU(u), "q_" + idx(i, u, t));
          }
        }
      }
    }
  }

  void addReservedCapacityRows() {
    for (int i = 0; i < I_; ++i) {
      for (int u = 0; u + 1 < S_; ++u) {
        int oh = cat_.onboardHat[static_cast<size_t>(i) * S_ + u];
        if (oh < 0) continue;
        lp_.addRow(RowSense::LessEqual,
                   static_cast<double>(inst_.params.capacity), {{oh, 1.0}},
                   "capHat_" + idx(i, u));
      }
    }
  }

  void addPinningRows() {
    pinRowZ_.reserve(cat_.freeZ.size());
    for (size_t k = 0; k < cat_.freeZ.size(); ++k) {
      cat_.definitionRows.push_back({lp_.numRows(), cat_.freeZCol[k]});
      pinRowZ_.push_back(lp_.addRow(RowSense::Equal, 0.0,
                                    {{cat_.freeZCol[k], 1.0}},
                                    "pin_z_" + idx(static_cast<int>(k))));
    }
    pinRowKappa_.reserve(cat_.kappaVars.size());
    for (size_t k = 0; k < cat_.kappaVars.size(); ++k) {
      cat_.definitionRows.push_back({lp_.numRows(), cat_.kappaCol[k]});
      pinRowKappa_.push_back(lp_.addRow(RowSense::Equal, 0.0,
                                        {{cat_.kappaCol[k], 1.0}},
                                        "pin_k_" + idx(static_cast<int>(k))));
    }
  }

  void unpair(int pair, int& u, int& v) const {
    // Inverse of the upper-triangular pair index.
    int uu = 0;
    int rem = pair;
    while (rem >= S_ - 1 - uu) {
      rem -= S_ - 1 - uu;
      ++uu;
    }
    u = uu;
    v = uu + rem + 1;
  }
};

}  // namespace

BuiltModel buildMonolithicILP(const Instance& inst, const ObjectiveWeights& w,
                              const BigMProfile& bigM,
                              const BuildOptions& options) {
  Assembler a(inst, w, bigM, Kind::Monolithic, options);
  return a.build();
}

BuiltModel buildRMP(const Instance& inst, const ObjectiveWeights& w,
                    const BigMProfile& bigM, bool includeValidInequalities) {
  BuildOptions options;
  Assembler a(inst, w, bigM, Kind::RMP, options);
  BuiltModel model = a.build();
  if (includeValidInequalities) {
    addValidInequalities(model, inst, bigM);
    addRelaxationStrengthening(model, inst, bigM);
  }
  return model;
}

SubproblemLP buildSP(const Instance& inst, const ObjectiveWeights& w,
                     const BigMProfile& bigM, bool withSlacks) {
  BuildOptions options;
  Assembler a(inst, w, bigM, Kind::Subproblem, options);
  a.slackMode_ = withSlacks;
  BuiltModel model = a.build();
  SubproblemLP sp;
  sp.lp = std::move(model.lp);
  sp.catalog = std::move(model.catalog);
  sp.pinRowZ = std::move(a.pinRowZ_);
  sp.pinRowKappa = std::move(a.pinRowKappa_);
  sp.slacked = withSlacks;
  if (withSlacks) {
    // Feasibility variant: objective is the total slack alone.
    for (int j = 0; j < sp.lp.numVariables(); ++j) sp.lp.setObjective(j, 0.0);
    for (int c : sp.catalog.slackService)
      if (c >= 0) sp.lp.setObjective(c, 1.0);
    for (int c : sp.catalog.slackCapacity)
      if (c >= 0) sp.lp.setObjective(c, 1.0);
  }
  return sp;
}

void SubproblemLP::setPoint(const std::vector<double>& zFree,
                            const std::vector<double>& kappaFree) {
  for (size_t k = 0; k < pinRowZ.size(); ++k) lp.setRhs(pinRowZ[k], zFree[k]);
  for (size_t k = 0; k < pinRowKappa.size(); ++k)
    lp.setRhs(pinRowKappa[k], kappaFree[k]);
}

BuiltModel buildStrengthenedSubproblem(const Instance& inst,
                                       const ObjectiveWeights& w,
                                       const BigMProfile& bigM,
                                       const std::vector<double>& xi,
                                       const std::vector<double>& chi) {
  BuildOptions options;
  Assembler a(inst, w, bigM, Kind::Strengthened, options);
  BuiltModel model = a.build();
  auto& cat = model.catalog;
  if (xi.size() != cat.freeZCol.size() || chi.size() != cat.kappaVars.size())
    throw std::invalid_argument(
        "buildStrengthenedSubproblem: multiplier shape mismatch");
  // kappa integral, z relaxed in [0,1]; price the pinning rows out into the
  // objective with multipliers xi, chi.
  for (size_t k = 0; k < cat.kappaVars.size(); ++k)
    model.lp.variable(cat.kappaCol[k]).integral = true;
  for (size_t k = 0; k < cat.freeZCol.size(); ++k)
    model.lp.setObjective(cat.freeZCol[k], -xi[k]);
  for (size_t k = 0; k < cat.kappaVars.size(); ++k)
    model.lp.setObjective(cat.kappaCol[k], -chi[k]);
  return model;
}

BuiltModel buildPricingExtension(const Instance& inst, const BigMProfile& bigM,
                                 const std::vector<double>& timeVaryingFare,
                                 double revenueFloorFraction,
                                 const BuildOptions& options) {
  if (timeVaryingFare.size() !=
      static_cast<size_t>(DemandProfile::pairCount(inst.line.stationCount)) *
          inst.horizon.horizonLength)
    throw std::invalid_argument("buildPricingExtension: fare table shape");
  ObjectiveWeights pure{1.0, 0.0};
  Assembler a(inst, pure, bigM, Kind::Pricing, options);
  BuiltModel model = a.build();
  auto& cat = model.catalog;
  const int S = inst.line.stationCount;
  const int T = inst.horizon.horizonLength;

  // Revenue floor: sum nu * (actual non-reserved arrivals + reservations)
  // >= floor * baseline revenue at static fares.
  LinearProgram& lp = model.lp;
  SparseVec coeffs;
  double lhsConst = 0.0;
  double baseline = 0.0;
  for (int u = 0; u < S - 1; ++u) {
    for (int v = u + 1; v < S; ++v) {
      int pair = cat.pairIndex(u, v);
      for (int t = 0; t < T; ++t) {
        double nu = timeVaryingFare[static_cast<size_t>(pair) * T + t];
        int64_t dFree = inst.demand.freeAt(u, v, t);
        int64_t dRes = inst.demand.reservedAt(u, v, t);
        baseline += inst.fares.at(u, v) * static_cast<double>(dFree + dRes);
        lhsConst += nu * static_cast<double>(dRes);
        int kcol = cat.arrivalOD[static_cast<size_t>(pair) * T + t];
        if (kcol >= 0) {
          if (nu != 0.0) coeffs.push_back({kcol, nu});
        } else {
          lhsConst += nu * cat.arrivalODConst[static_cast<size_t>(pair) * T + t];
        }
      }
    }
  }
  lp.addRow(RowSense::GreaterEqual,
            revenueFloorFraction * baseline - lhsConst, std::move(coeffs),
            "revenue_floor");
  return model;
}

int addValidInequalities(BuiltModel& rmp, const Instance& inst,
                         const BigMProfile& bigM) {
  auto& cat = rmp.catalog;
  if (cat.validInequalitiesAdded)
    throw std::logic_error("addValidInequalities: already added to this model");
  cat.validInequalitiesAdded = true;
  LinearProgram& lp = rmp.lp;
  const int S = cat.stations;
  const int T = cat.horizon;
  const int I = cat.trains;
  const int P = cat.pairs;
  int rowsBefore = lp.numRows();

  auto pairHasArrivals = [&](int pair) {
    for (int t = 0; t < T; ++t) {
      if (cat.arrivalOD[static_cast<size_t>(pair) * T + t] >= 0 ||
          cat.arrivalODConst[static_cast<size_t>(pair) * T + t] > 0)
        return true;
    }
    return false;
  };

  cat.viBoard.assign(static_cast<size_t>(I) * P, -1);
  cat.viOnboard.assign(static_cast<size_t>(I) * S, -1);
  cat.viAlight.assign(static_cast<size_t>(I) * S, -1);
  cat.viBoardSum.assign(static_cast<size_t>(I) * S, -1);
  cat.viGamma.assign(static_cast<size_t>(I) * P, {});

  auto xIsConst = [&](int i, int t) {
    return cat.x[static_cast<size_t>(i) * T + t] < 0;
  };
  auto xConst = [&](int i, int t) {
    return static_cast<double>(cat.xFix[static_cast<size_t>(i) * T + t]);
  };

  for (int i = 0; i < I; ++i) {
    for (int u = 0; u < S - 1; ++u) {
      for (int v = u + 1; v < S; ++v) {
        int pair = cat.pairIndex(u, v);
        if (!pairHasArrivals(pair)) continue;
        double fr = inst.params.fairnessAt(i, u, v, S);
        size_t at = static_cast<size_t>(i) * P + pair;
        cat.viBoard[at] = lp.addVariable(0.0, kInfinity, 0.0, false,
                                         "vb_" + std::to_string(i) + "_" +
                                             std::to_string(u) + "_" +
                                             std::to_string(v));
        // b~ = rho * sum_t x_it * K_uvt, Gamma-style linearization on the
        // x-weighted arrival terms.
        SparseVec wrow{{cat.viBoard[at], 1.0}};
        double rhs = 0.0;
        for (int t = 0; t < T; ++t) {
          int kcol = cat.arrivalOD[static_cast<size_t>(pair) * T + t];
          double kconst = cat.arrivalODConst[static_cast<size_t>(pair) * T + t];
          bool xc = xIsConst(i, t);
          double xv = xc ? xConst(i, t) : 0.0;
          if (xc && xv == 0.0) continue;
          if (kcol < 0 && kconst <= 0) continue;
          if (xc) {  // x == 1
            if (kcol >= 0) wrow.push_back({kcol, -fr});
            else rhs += fr * kconst;
          } else if (kcol < 0) {
            wrow.push_back({cat.x[static_cast<size_t>(i) * T + t],
                            -fr * kconst});
          } else {
            int g = lp.addVariable(0.0, bigM.mUVT(pair, t), 0.0, false,
                                   "vG_" + std::to_string(i) + "_" +
                                       std::to_string(pair) + "_" +
                                       std::to_string(t));
            cat.viGamma[at].push_back({t, g});
            int xcolv = cat.x[static_cast<size_t>(i) * T + t];
            double m = bigM.mUVT(pair, t);
            lp.addRow(RowSense::LessEqual, 0.0, {{g, 1.0}, {xcolv, -m}});
            lp.addRow(RowSense::LessEqual, 0.0, {{g, 1.0}, {kcol, -1.0}});
            lp.addRow(RowSense::GreaterEqual, -m,
                      {{g, 1.0}, {kcol, -1.0}, {xcolv, -m}});
            wrow.push_back({g, -fr});
          }
        }
        cat.definitionRows.push_back({lp.numRows(), cat.viBoard[at]});
        lp.addRow(RowSense::Equal, rhs, std::move(wrow),
                  "def_vb_" + std::to_string(i) + "_" + std::to_string(pair));
      }
    }
    for (int u = 1; u < S; ++u) {
      SparseVec row;
      cat.viAlight[static_cast<size_t>(i) * S + u] =
          lp.addVariable(0.0, kInfinity, 0.0, false,
                         "vl_" + std::to_string(i) + "_" + std::to_string(u));
      row.push_back({cat.viAlight[static_cast<size_t>(i) * S + u], 1.0});
      for (int m = 0; m < u; ++m) {
        int c = cat.viBoard[static_cast<size_t>(i) * P + cat.pairIndex(m, u)];
        if (c >= 0) row.push_back({c, -1.0});
      }
      cat.definitionRows.push_back(
          {lp.numRows(), cat.viAlight[static_cast<size_t>(i) * S + u]});
      lp.addRow(RowSense::Equal, 0.0, std::move(row),
                "def_vl_" + std::to_string(i) + "_" + std::to_string(u));
    }
    for (int u = 0; u + 1 < S; ++u) {
      cat.viOnboard[static_cast<size_t>(i) * S + u] =
          lp.addVariable(0.0, kInfinity, 0.0, false,
                         "vo_" + std::to_string(i) + "_" + std::to_string(u));
      SparseVec row{{cat.viOnboard[static_cast<size_t>(i) * S + u], 1.0}};
      if (u > 0) {
        row.push_back({cat.viOnboard[static_cast<size_t>(i) * S + u - 1], -1.0});
        row.push_back({cat.viAlight[static_cast<size_t>(i) * S + u], 1.0});
      }
      for (int v = u + 1; v < S; ++v) {
        int c = cat.viBoard[static_cast<size_t>(i) * P + cat.pairIndex(u, v)];
        if (c >= 0) row.push_back({c, -1.0});
      }
      cat.definitionRows.push_back(
          {lp.numRows(), cat.viOnboard[static_cast<size_t>(i) * S + u]});
      lp.addRow(RowSense::Equal, 0.0, std::move(row),
                "def_vo_" + std::to_string(i) + "_" + std::to_string(u));
      // Key rows: reserved + guaranteed non-reserved load within capacity.
      SparseVec cap{{cat.viOnboard[static_cast<size_t>(i) * S + u], 1.0}};
      int oh = cat.onboardHat[static_cast<size_t>(i) * S + u];
      if (oh >= 0) cap.push_back({oh, 1.0});
      lp.addRow(RowSense::LessEqual, static_cast<double>(inst.params.capacity),
                std::move(cap),
                "vi_cap_" + std::to_string(i) + "_" + std::to_string(u));
    }
    for (int u = 0; u < S - 1; ++u) {
      cat.viBoardSum[static_cast<size_t>(i) * S + u] =
          lp.addVariable(0.0, kInfinity, 0.0, false,
                         "vbs_" + std::to_string(i) + "_" + std::to_string(u));
      SparseVec row{{cat.viBoardSum[static_cast<size_t>(i) * S + u], 1.0}};
      for (int v = u + 1; v < S; ++v) {
        int c = cat.viBoard[static_cast<size_t>(i) * P + cat.pairIndex(u, v)];
        if (c >= 0) row.push_back({c, -1.0});
      }
      cat.definitionRows.push_back(
          {lp.numRows(), cat.viBoardSum[static_cast<size_t>(i) * S + u]});
      lp.addRow(RowSense::Equal, 0.0, std::move(row),
                "def_vbs_" + std::to_string(i) + "_" + std::to_string(u));
    }
  }

  return lp.numRows() - rowsBefore;
}

int addRelaxationStrengthening(BuiltModel& rmp, const Instance& inst,
                               const BigMProfile& bigM) {
  auto& cat = rmp.catalog;
  LinearProgram& lp = rmp.lp;
  const int S = cat.stations;
  const int T = cat.horizon;
  const int I = cat.trains;
  int rowsBefore = lp.numRows();

  // Section-coverage rows: passengers crossing section s with actual
  // arrival at/after t ride trains that depart after t, each carrying at
  // most C across s. Served reserved passengers (those arriving before the
  // last departure) are counted via z of the last train. Everything is
  // telescoped through suffix aggregates so the rows stay sparse.
  {
    const int lastTrain = I - 1;
    auto zTerm = [&](int i, int t) -> std::pair<int, double> {
      // (column, constant): column -1 means the value is the constant.
      int c = cat.z[static_cast<size_t>(i) * T + t];
      if (c >= 0) return {c, 0.0};
      return {-1, static_cast<double>(cat.zFix[static_cast<size_t>(i) * T + t])};
    };
    // trainsAfter[t] = sum_i z_it
    std::vector<int> trainsAfter(T, -1);
    for (int t = 0; t < T; ++t) {
      SparseVec row;
      double fixed = 0.0;
      for (int i = 0; i < I; ++i) {
        auto [c, v] = zTerm(i, t);
        if (c >= 0) row.push_back({c, -1.0});
        else fixed += v;
      }
      trainsAfter[t] = lp.addVariable(0.0, static_cast<double>(I), 0.0, false,
                                      "vTrainsAfter_" + std::to_string(t));
      row.push_back({trainsAfter[t], 1.0});
      cat.definitionRows.push_back({lp.numRows(), trainsAfter[t]});
      lp.addRow(RowSense::Equal, fixed, std::move(row),
                "def_vTrainsAfter_" + std::to_string(t));
    }
    for (int sct = 0; sct + 1 < S; ++sct) {
      // Cross-section arrivals per timestamp, then suffix sums.
      int prevSuffix = -1;
      std::vector<int> suffixCol(T, -1);
      std::vector<double> suffixConst(T + 1, 0.0);
      std::vector<double> rsvSuffix(T + 1, 0.0);
      bool anyDemand = false;
      for (int t = T - 1; t >= 0; --t) {
        SparseVec row;
        double fixed = suffixConst[t + 1];
        for (int u = 0; u <= sct; ++u) {
          for (int v = sct + 1; v < S; ++v) {
            int pair = cat.pairIndex(u, v);
            int kcol = cat.arrivalOD[static_cast<size_t>(pair) * T + t];
            if (kcol >= 0) row.push_back({kcol, -1.0});
            else fixed += cat.arrivalODConst[static_cast<size_t>(pair) * T + t];
          }
        }
        rsvSuffix[t] = rsvSuffix[t + 1];
        if (!row.empty() || fixed > 0) anyDemand = true;
        if (row.empty()) {
          suffixConst[t] = fixed;
          suffixCol[t] = prevSuffix;  // reuse: no new variable needed
          continue;
        }
        if (prevSuffix >= 0) row.push_back({prevSuffix, -1.0});
        int col = lp.addVariable(0.0, kInfinity, 0.0, false,
                                 "vSuffix_" + std::to_string(sct) + "_" +
                                     std::to_string(t));
        row.push_back({col, 1.0});
        cat.definitionRows.push_back({lp.numRows(), col});
        lp.addRow(RowSense::Equal, fixed, std::move(row),
                  "def_vSuffix_" + std::to_string(sct) + "_" +
                      std::to_string(t));
        suffixCol[t] = col;
        suffixConst[t] = 0.0;
        prevSuffix = col;
      }
      if (!anyDemand) continue;
      // Coverage: suffix arrivals + served reserved suffix <= C * trainsAfter.
      double capacity = static_cast<double>(inst.params.capacity);
      for (int t = 0; t < T; ++t) {
        SparseVec row;
        double rhs = -suffixConst[t];
        if (suffixCol[t] >= 0) row.push_back({suffixCol[t], 1.0});
        // Served reserved passengers crossing the section, arriving >= t.
        for (int tp = t; tp < T; ++tp) {
          double cross = 0.0;
          for (int u = 0; u <= sct; ++u)
            for (int v = sct + 1; v < S; ++v)
              cross += static_cast<double>(inst.demand.reservedAt(u, v, tp));
          if (cross == 0.0) continue;
          auto [zc, zv] = zTerm(lastTrain, tp);
          if (zc >= 0) row.push_back({zc, cross});
          else rhs -= cross * zv;
        }
        auto mergeDup = [&row]() {
          std::sort(row.begin(), row.end());
          size_t out = 0;
          for (size_t i = 0; i < row.size(); ++i) {
            if (out > 0 && row[out - 1].first == row[i].first)
              row[out - 1].second += row[i].second;
            else
              row[out++] = row[i];
          }
          row.resize(out);
        };
        mergeDup();
        row.push_back({trainsAfter[t], -capacity});
        if (row.empty()) continue;
        lp.addRow(RowSense::LessEqual, rhs, std::move(row),
                  "vi_cover_" + std::to_string(sct) + "_" + std::to_string(t));
      }
    }
  }

  // Waiting floors: tie the cumulative waiting variables to the timetable.
  // For train i at station u and timestamp t (integral case, x_it = 1):
  //   reserved:  phwc_iut = CumRsv(u,t) - sum_{t'<=t} Rsv(u,t') z_{i-1,t'}
  //   free:      pwc_iut  = CumArr(u,t) - sum_{t'<=t} z_{i-1,t'} A(u,t')
  // The >= forms below are valid for every feasible point and lift the
  // fractional relaxation, which otherwise hides nearly all waiting.
  {
    const int lastIdx = I - 1;
    (void)lastIdx;
    auto zOf = [&](int i, int t) -> std::pair<int, double> {
      int c = cat.z[static_cast<size_t>(i) * T + t];
      if (c >= 0) return {c, 0.0};
      return {-1, static_cast<double>(cat.zFix[static_cast<size_t>(i) * T + t])};
    };
    auto xOf = [&](int i, int t) -> std::pair<int, double> {
      int c = cat.x[static_cast<size_t>(i) * T + t];
      if (c >= 0) return {c, 0.0};
      return {-1, static_cast<double>(cat.xFix[static_cast<size_t>(i) * T + t])};
    };
    // Reserved arrivals per (u, t).
    std::vector<double> rsv(static_cast<size_t>(S) * T, 0.0);
    for (int u = 0; u < S - 1; ++u)
      for (int v = u + 1; v < S; ++v)
        for (int t = 0; t < T; ++t)
          rsv[static_cast<size_t>(u) * T + t] +=
              static_cast<double>(inst.demand.reservedAt(u, v, t));

    // Cumulative actual non-reserved arrivals CumArr(u,t) as aux columns,
    // plus their static upper bounds.
    std::vector<int> cumArr(static_cast<size_t>(S) * T, -1);
    std::vector<double> cumArrConst(static_cast<size_t>(S) * T, 0.0);
    std::vector<double> cumMax(static_cast<size_t>(S) * T, 0.0);
    const int iota = inst.params.maxShift;
    for (int u = 0; u < S - 1; ++u) {
      double maxSoFar = 0.0;
      double constSoFar = 0.0;
      int prev = -1;
      for (int t = 0; t < T; ++t) {
        // max cumulative arrivals: all demand that can arrive at or before t
        double reachable = 0.0;
        for (int v = u + 1; v < S; ++v)
          for (int o = 0; o <= std::min(T - 1, t + iota); ++o)
            reachable += static_cast<double>(inst.demand.freeAt(u, v, o));
        maxSoFar = reachable;
        cumMax[static_cast<size_t>(u) * T + t] = maxSoFar;
        int acol = cat.arrivalStation[static_cast<size_t>(u) * T + t];
        double aconst = 0.0;
        if (acol < 0) {
          for (int v = u + 1; v < S; ++v)
            aconst +=
                cat.arrivalODConst[static_cast<size_t>(cat.pairIndex(u, v)) * T + t];
        }
        constSoFar += aconst;
        if (acol < 0 && prev < 0) {
          cumArrConst[static_cast<size_t>(u) * T + t] = constSoFar;
          continue;
        }
        SparseVec row;
        if (prev >= 0) row.push_back({prev, -1.0});
        if (acol >= 0) row.push_back({acol, -1.0});
        int col = lp.addVariable(0.0, kInfinity, 0.0, false,
                                 "vCumA_" + std::to_string(u) + "_" +
                                     std::to_string(t));
        row.push_back({col, 1.0});
        cat.definitionRows.push_back({lp.numRows(), col});
        // the running constant is folded once: subtract what prev carried
        double rhs = prev >= 0 ? aconst : constSoFar;
        lp.addRow(RowSense::Equal, rhs, std::move(row),
                  "def_vCumA_" + std::to_string(u) + "_" + std::to_string(t));
        cumArr[static_cast<size_t>(u) * T + t] = col;
        prev = col;
      }
    }

    // zA products and their running sums SubZA_{i,u,t}; running reserved
    // sums SubRZ_{i,u,t} are linear in z.
    // zA_{i,u,t} = z_it * A_ut (big-M on the arrival bound).
    std::vector<int> subZA(static_cast<size_t>(I) * S * T, -1);
    std::vector<double> subZAconst(static_cast<size_t>(I) * S * T, 0.0);
    std::vector<int> subRZ(static_cast<size_t>(I) * S * T, -1);
    std::vector<double> subRZconst(static_cast<size_t>(I) * S * T, 0.0);
    for (int i = 0; i + 1 < I; ++i) {
      for (int u = 0; u < S - 1; ++u) {
        int prevZA = -1, prevRZ = -1;
        double constZA = 0.0, constRZ = 0.0;
        for (int t = 0; t < T; ++t) {
          size_t at = (static_cast<size_t>(i) * S + u) * T + t;
          auto [zc, zv] = zOf(i, t);
          int acol = cat.arrivalStation[static_cast<size_t>(u) * T + t];
          double aconst = 0.0;
          if (acol < 0)
            for (int v = u + 1; v < S; ++v)
              aconst += cat.arrivalODConst[
                  static_cast<size_t>(cat.pairIndex(u, v)) * T + t];
          // --- zA contribution ---
          SparseVec rowZA;
          double rhsZA = 0.0;
          bool needVarZA = false;
          if (zc < 0) {
            if (zv > 0.5) {
              // z fixed at 1: contribution is A itself
              if (acol >= 0) { rowZA.push_back({acol, -1.0}); needVarZA = true; }
              else constZA += aconst;
            }
          } else if (acol < 0) {
            if (aconst > 0) { rowZA.push_back({zc, -aconst}); needVarZA = true; }
          } else {
            double m = bigM.mUT(u, t);
            int prod = lp.addVariable(0.0, m, 0.0, false,
                                      "vZA_" + std::to_string(i) + "_" +
                                          std::to_string(u) + "_" +
                                          std::to_string(t));
            lp.addRow(RowSense::LessEqual, 0.0, {{prod, 1.0}, {zc, -m}});
            lp.addRow(RowSense::LessEqual, 0.0, {{prod, 1.0}, {acol, -1.0}});
            lp.addRow(RowSense::GreaterEqual, -m,
                      {{prod, 1.0}, {acol, -1.0}, {zc, -m}});
            rowZA.push_back({prod, -1.0});
            needVarZA = true;
          }
          if (needVarZA || prevZA >= 0) {
            if (prevZA >= 0) rowZA.push_back({prevZA, -1.0});
            int col = lp.addVariable(0.0, kInfinity, 0.0, false,
                                     "vSubZA_" + std::to_string(i) + "_" +
                                         std::to_string(u) + "_" +
                                         std::to_string(t));
            rowZA.push_back({col, 1.0});
            cat.definitionRows.push_back({lp.numRows(), col});
            lp.addRow(RowSense::Equal, rhsZA, std::move(rowZA),
                      "def_vSubZA_" + std::to_string(i) + "_" +
                          std::to_string(u) + "_" + std::to_string(t));
            subZA[at] = col;
            prevZA = col;
          }
          subZAconst[at] = constZA;
          // --- reserved running sum: sum rsv(u,t') z_{i,t'} ---
          double r = rsv[static_cast<size_t>(u) * T + t];
          SparseVec rowRZ;
          if (r > 0) {
            if (zc >= 0) rowRZ.push_back({zc, -r});
            else constRZ += r * zv;
          }
          if (!rowRZ.empty() || prevRZ >= 0) {
            if (prevRZ >= 0) rowRZ.push_back({prevRZ, -1.0});
            int col = lp.addVariable(0.0, kInfinity, 0.0, false,
                                     "vSubRZ_" + std::to_string(i) + "_" +
                                         std::to_string(u) + "_" +
                                         std::to_string(t));
            rowRZ.push_back({col, 1.0});
            cat.definitionRows.push_back({lp.numRows(), col});
            lp.addRow(RowSense::Equal, 0.0, std::move(rowRZ),
                      "def_vSubRZ_" + std::to_string(i) + "_" +
                          std::to_string(u) + "_" + std::to_string(t));
            subRZ[at] = col;
            prevRZ = col;
          }
          subRZconst[at] = constRZ;
        }
      }
    }

    // Floor rows themselves.
    for (int i = 0; i < I; ++i) {
      for (int u = 0; u < S - 1; ++u) {
        double cumRsv = 0.0;
        for (int t = 0; t < T; ++t) {
          size_t pat = (static_cast<size_t>(i) * S + u) * T + t;
          cumRsv += rsv[static_cast<size_t>(u) * T + t];
          auto [xc, xv] = xOf(i, t);
          if (xc < 0 && xv < 0.5) continue;  // x fixed at 0: nothing waits
          // Reserved floor.
          int phwc = cat.pHatWc[pat];
          if (phwc >= 0 && cumRsv > 0) {
            SparseVec row{{phwc, 1.0}};
            double rhs = 0.0;
            if (xc >= 0) row.push_back({xc, -cumRsv});
            else rhs += cumRsv;  // x == 1: move -CumRsv across
            if (i > 0) {
              size_t pp = (static_cast<size_t>(i - 1) * S + u) * T + t;
              if (subRZ[pp] >= 0) row.push_back({subRZ[pp], 1.0});
              rhs -= subRZconst[pp];
            }
            lp.addRow(RowSense::GreaterEqual, rhs, std::move(row),
                      "vi_rsvfloor_" + std::to_string(i) + "_" +
                          std::to_string(u) + "_" + std::to_string(t));
          }
          // Free floor.
          int pwc = cat.pwc[pat];
          double cm = cumMax[static_cast<size_t>(u) * T + t];
          if (pwc >= 0 && cm > 0) {
            SparseVec row{{pwc, 1.0}};
            double rhs = -cm;  // - CumMax * (1 - x) with x == 0 base
            int ca = cumArr[static_cast<size_t>(u) * T + t];
            if (ca >= 0) row.push_back({ca, -1.0});
            else rhs += cumArrConst[static_cast<size_t>(u) * T + t];
            if (i > 0) {
              size_t pp = (static_cast<size_t>(i - 1) * S + u) * T + t;
              if (subZA[pp] >= 0) row.push_back({subZA[pp], 1.0});
              rhs -= subZAconst[pp];
            }
            if (xc >= 0) row.push_back({xc, -cm});
            else if (xv > 0.5) rhs += cm;  // x == 1 removes the big-M slack
            lp.addRow(RowSense::GreaterEqual, rhs, std::move(row),
                      "vi_freefloor_" + std::to_string(i) + "_" +
                          std::to_string(u) + "_" + std::to_string(t));
          }
        }
      }
    }
  }
  return lp.numRows() - rowsBefore;
}

Basis crashBasis(const LinearProgram& lp, const VariableCatalog& catalog) {
  Basis basis;
  basis.structState.assign(lp.numVariables(), Basis::AtLower);
  basis.logicalState.assign(lp.numRows(), Basis::Basic);
  for (int j = 0; j < lp.numVariables(); ++j) {
    const auto& v = lp.variable(j);
    if (!std::isfinite(v.lower) && std::isfinite(v.upper))
      basis.structState[j] = Basis::AtUpper;
  }
  // Diagonal kappa at its demand bound satisfies conservation outright.
  for (size_t k = 0; k < catalog.kappaVars.size(); ++k) {
    if (catalog.kappaVars[k].arrival == catalog.kappaVars[k].origin)
      basis.structState[catalog.kappaCol[k]] = Basis::AtUpper;
  }
  for (auto [row, col] : catalog.definitionRows) {
    basis.structState[col] = Basis::Basic;
    basis.logicalState[row] = Basis::AtLower;
  }
  return basis;
}

std::string VariableCatalog::describe(const LinearProgram& lp) const {
  std::ostringstream out;
  for (int j = 0; j < lp.numVariables(); ++j) {
    out << j << "\t" << lp.variable(j).name << "\n";
  }
  return out.str();
}

}  // namespace bdtt
