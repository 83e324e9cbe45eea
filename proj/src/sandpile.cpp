#include "gds/sandpile.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

namespace gds {

namespace {

SiteMask ball_mask(const LatticeWindow& w, double R) {
  SiteMask m(w.size(), 0);
  const double r2 = R * R;
  for (std::size_t i = 0; i < w.size(); ++i) m[i] = w.norm2(w.site(i)) < r2 ? 1 : 0;
  return m;
}

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

ConfiningBall::ConfiningBall(const LatticeWindow& window, double R)
    : window_(window), R_(R), inside_(ball_mask(window, R)), boundary_(window.size(), 0) {
  if (!(R > 0.0)) throw InvalidArgument("confining radius must be positive");
  geometry_ = kernels::make_sweep_geometry(window, inside_);
  for (std::size_t i : geometry_.order) {
    for (int a = 0; a < window.dim(); ++a) {
      for (std::ptrdiff_t s : {-window.stride(a), window.stride(a)}) {
        const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + s);
        if (!inside_[j]) boundary_[j] = 1;
      }
    }
  }
}

const char* to_string(Schedule s) {
  switch (s) {
    case Schedule::kSweep: return "sweep";
    case Schedule::kQueue: return "queue";
    case Schedule::kRandom: return "random";
    case Schedule::kRedBlack: return "red_black";
  }
  return "?";
}

Schedule parse_schedule(const std::string& name) {
  if (name == "sweep") return Schedule::kSweep;
  if (name == "queue") return Schedule::kQueue;
  if (name == "random") return Schedule::kRandom;
  if (name == "red_black" || name == "red-black") return Schedule::kRedBlack;
  throw InvalidArgument("unknown schedule '" + name + "'");
}

double topple(MassConfig& config, const Site& site, const ConfiningBall& ball) {
  const auto& w = config.window();
  if (!(w == ball.window())) throw InvalidArgument("configuration and ball use different windows");
  if (!w.contains(site) || !ball.inside(w.index(site))) {
    throw InvalidArgument("toppling outside confining ball");
  }
  const std::size_t i = w.index(site);
  const double m = config[i];
  if (m <= 0.0) return 0.0;
  config[i] = 0.0;
  const double q = m * (1.0 / (2.0 * w.dim()));
  for (int a = 0; a < w.dim(); ++a) {
    config[i - w.stride(a)] += q;
    config[i + w.stride(a)] += q;
  }
  return m;
}

std::pair<double, double> mass_totals(const MassConfig& config) {
  CompensatedSum p, n;
  for (double v : config.values()) {
    p.add(positive_part(v));
    n.add(negative_part(v));
  }
  return {p.value(), n.value()};
}

double quadratic_weight(const MassConfig& config) {
  const auto& w = config.window();
  CompensatedSum q;
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (config[i] != 0.0) q.add(config[i] * w.norm2(w.site(i)));
  }
  return q.value();
}

namespace {

class Engine {
 public:
  Engine(const MassConfig& sigma, const GdsOptions& opt)
      : opt_(opt), w_(sigma.window()), ball_(w_, opt.R), mass_(sigma.values().begin(), sigma.values().end()),
        emitted_(w_.size(), 0.0) {
    for (std::size_t i = 0; i < w_.size(); ++i) {
      if (!std::isfinite(mass_[i])) throw InvalidArgument("sigma has non-finite values");
      if (mass_[i] != 0.0 && !ball_.inside(i)) {
        throw InvalidArgument("support of sigma must lie in the open ball B(0,R)");
      }
      if (ball_.inside(i) || ball_.on_boundary(i)) {
        active_.push_back(i);
        norm2_.push_back(w_.norm2(w_.site(i)));
      }
    }
    std::tie(m_plus0_, m_minus0_) = mass_totals(sigma);
    if (opt.require_admissible && m_plus0_ > m_minus0_ * (1.0 + 1e-12) + 1e-300) {
      throw InvalidArgument("inadmissible configuration: total positive mass " + fmt(m_plus0_) +
                            " exceeds total negative mass " + fmt(m_minus0_));
    }
    stop_tol_ = opt.stop_tol > 0.0 ? opt.stop_tol : 1e-10 * std::max(1.0, m_plus0_);
    abs_total0_ = m_plus0_ + m_minus0_;
    total0_ = total(sigma);
    const double reach = opt.R + w_.xi();
    q_hi_ = reach * reach * m_plus0_;
    q_lo_ = -reach * reach * m_minus0_;
  }

  GdsResult run() {
    GdsResult res(w_);
    res.stop_tol = stop_tol_;
    res.audited = opt_.audit;
    prev_plus_ = m_plus0_;
    prev_minus_ = m_minus0_;
    if (opt_.schedule == Schedule::kRandom) rng_.seed(opt_.seed);
    if (opt_.schedule == Schedule::kRedBlack) scratch_.assign(w_.size(), 0.0);
    if (opt_.schedule == Schedule::kQueue) init_queue();

    double residual = 0.0;
    long round = 0;
    while (true) {
      if (round >= opt_.max_rounds) {
        throw ConvergenceError("generalized divisible sandpile did not reach stop_tol within " +
                                   std::to_string(opt_.max_rounds) + " rounds (residual " + fmt(residual) + ")",
                               round, residual);
      }
      ++round;
      const double emitted = do_round(res);
      total_.add(emitted);
      residual = max_positive_in_ball();
      record_round(res, round, residual, emitted);
      const bool done = opt_.schedule == Schedule::kQueue ? queue_.empty() : residual < stop_tol_;
      if (done) break;
    }

    res.rounds = round;
    res.stop_residual = residual;
    res.total_emitted = total_.value();
    res.topplings = topplings_;
    std::copy(mass_.begin(), mass_.end(), res.nu.values().begin());
    const double xi2 = w_.xi() * w_.xi();
    for (std::size_t i = 0; i < w_.size(); ++i) res.u[i] = xi2 * emitted_[i];
    if (opt_.check_invariants) check_final(res);
    return res;
  }

 private:
  double topple_index(std::size_t i, GdsResult& res) {
    const double m = mass_[i];
    if (m <= 0.0) return 0.0;
    mass_[i] = 0.0;
    const double q = m * (1.0 / (2.0 * w_.dim()));
    for (int a = 0; a < w_.dim(); ++a) {
      mass_[i - w_.stride(a)] += q;
      mass_[i + w_.stride(a)] += q;
    }
    emitted_[i] += m;
    ++topplings_;
    if (opt_.audit) res.trace.push_back({static_cast<std::uint32_t>(i), m});
    return m;
  }

  double do_round(GdsResult& res) {
    const auto& geo = ball_.geometry();
    switch (opt_.schedule) {
      case Schedule::kSweep:
        if (!opt_.audit) return counted(kernels::serial::topple_sweep(geo, mass_, emitted_));
        return generic(geo.order, res);
      case Schedule::kRedBlack:
        if (!opt_.audit) return counted(kernels::parallel::topple_red_black(geo, mass_, emitted_, scratch_));
        return generic(geo.red, res) + generic(geo.black, res);
      case Schedule::kRandom: {
        perm_ = geo.order;
        std::shuffle(perm_.begin(), perm_.end(), rng_);
        return generic(perm_, res);
      }
      case Schedule::kQueue:
        return queue_round(res);
    }
    return 0.0;
  }

  double counted(const kernels::SweepStats& st) {
    topplings_ += st.topplings;
    return st.emitted;
  }

  double generic(const std::vector<std::size_t>& order, GdsResult& res) {
    double sum = 0.0;
    for (std::size_t i : order) sum += topple_index(i, res);
    return sum;
  }

  void init_queue() {
    in_queue_.assign(w_.size(), 0);
    for (std::size_t i : ball_.sites()) {
      if (mass_[i] >= stop_tol_) {
        queue_.push_back(i);
        in_queue_[i] = 1;
      }
    }
  }

  double queue_round(GdsResult& res) {
    double sum = 0.0;
    std::size_t n = queue_.size();
    while (n-- > 0) {
      const std::size_t i = queue_.front();
      queue_.pop_front();
      in_queue_[i] = 0;
      sum += topple_index(i, res);
      for (int a = 0; a < w_.dim(); ++a) {
        for (std::ptrdiff_t s : {-w_.stride(a), w_.stride(a)}) {
          const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + s);
          if (ball_.inside(j) && !in_queue_[j] && mass_[j] >= stop_tol_) {
            queue_.push_back(j);
            in_queue_[j] = 1;
          }
        }
      }
    }
    return sum;
  }

  double max_positive_in_ball() const {
    double r = 0.0;
    for (std::size_t i : ball_.sites()) r = std::max(r, mass_[i]);
    return r;
  }

  void record_round(GdsResult& res, long round, double residual, double emitted) {
    RoundStats st;
    st.round = round;
    st.residual = residual;
    CompensatedSum p, n, q;
    for (std::size_t k = 0; k < active_.size(); ++k) {
      const double v = mass_[active_[k]];
      p.add(positive_part(v));
      n.add(negative_part(v));
      if (v != 0.0) q.add(v * norm2_[k]);
    }
    st.m_plus = p.value();
    st.m_minus = n.value();
    st.q = q.value();
    st.total_emitted = total_.value();
    res.emitted_series.push_back(emitted);
    res.q_series.push_back(st.q);
    res.diagnostics.push_back(st);
    if (opt_.check_invariants) check_round(st);
    if (opt_.on_round) opt_.on_round(st);
  }

  void check_round(const RoundStats& st) {
    const double slack = 1e-12 * abs_total0_;
    if (st.m_plus > prev_plus_ + slack) {
      throw InvariantViolation("positive mass increased in round " + std::to_string(st.round));
    }
    if (st.m_minus > prev_minus_ + slack) {
      throw InvariantViolation("negative mass increased in round " + std::to_string(st.round));
    }
    const double qslack = 1e-12 * (q_hi_ - q_lo_) + 1e-300;
    if (st.q > q_hi_ + qslack || st.q < q_lo_ - qslack) {
      throw InvariantViolation("quadratic weight " + fmt(st.q) + " outside [" + fmt(q_lo_) + ", " +
                               fmt(q_hi_) + "] in round " + std::to_string(st.round));
    }
    prev_plus_ = st.m_plus;
    prev_minus_ = st.m_minus;
  }

  void check_final(const GdsResult& res) {
    CompensatedSum sum;
    for (double v : res.nu.values()) sum.add(v);
    if (std::abs(sum.value() - total0_) > 1e-12 * std::max(abs_total0_, 1e-300)) {
      throw InvariantViolation("mass not conserved: " + fmt(total0_) + " -> " + fmt(sum.value()));
    }
    for (std::size_t i = 0; i < w_.size(); ++i) {
      const double v = res.nu[i];
      if (ball_.inside(i)) {
        if (v >= stop_tol_) throw InvariantViolation("positive mass left inside the ball");
      } else if (!ball_.on_boundary(i) && v != 0.0) {
        throw InvariantViolation("mass escaped beyond the outer boundary of the ball");
      }
    }
  }

  GdsOptions opt_;
  LatticeWindow w_;
  ConfiningBall ball_;
  std::vector<double> mass_;
  std::vector<double> emitted_;
  std::vector<double> scratch_;
  std::vector<std::size_t> active_;
  std::vector<double> norm2_;
  std::vector<std::size_t> perm_;
  std::deque<std::size_t> queue_;
  std::vector<std::uint8_t> in_queue_;
  std::mt19937_64 rng_;
  CompensatedSum total_;
  long topplings_ = 0;
  double stop_tol_ = 0.0;
  double m_plus0_ = 0.0, m_minus0_ = 0.0, abs_total0_ = 0.0, total0_ = 0.0;
  double q_lo_ = 0.0, q_hi_ = 0.0;
  double prev_plus_ = 0.0, prev_minus_ = 0.0;
};

}  // namespace

GdsResult run_gds(const MassConfig& sigma, const GdsOptions& options) {
  if (!(options.R > 0.0)) throw InvalidArgument("confining radius must be positive");
  Engine engine(sigma, options);
  GdsResult res = engine.run();
  if (options.check_invariants) {
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      if (res.nu[i] < -negative_part(sigma[i]) - res.stop_tol) {
        throw InvariantViolation("final configuration dropped below -sigma_minus");
      }
    }
  }
  return res;
}

SiteMask occupied_set(const GdsResult& result, const MassConfig& sigma, double tol) {
  SiteMask m(sigma.size(), 0);
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    m[i] = (result.u[i] > 0.0 || result.nu[i] - sigma[i] > tol) ? 1 : 0;
  }
  return m;
}

}  // namespace gds
