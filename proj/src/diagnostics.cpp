#include "osslc/diagnostics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "osslc/error.hpp"
#include "osslc/features.hpp"

namespace osslc {

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double poly(const double* cc, int nord, double x) {
  double ret = cc[0];
  if (nord > 1) {
    double p = x * cc[nord - 1];
    for (int j = nord - 2; j > 0; --j) p = (p + cc[j]) * x;
    ret += p;
  }
  return ret;
}

double std_normal_quantile(double p) {
  static const boost::math::normal_distribution<double> normal;
  return boost::math::quantile(normal, p);
}

double normal_upper_tail(double x, double mean, double sd) {
  return boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(mean, sd), x));
}

// Log-determinant via Cholesky; nullopt when not positive definite.
std::optional<double> log_det(const Eigen::MatrixXd& S) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::MatrixXd L = llt.matrixL();
  double s = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0)) return std::nullopt;
    s += std::log(L(i, i));
  }
  return 2.0 * s;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

SpearmanResult spearman_matrix(const Matrix& X) {
  if (X.rows() < 2) fail(ErrorKind::EmptyInput, "Spearman correlation needs at least 2 rows");
  const std::size_t p = X.cols();
  std::vector<std::vector<double>> ranks(p);
  SpearmanResult out{Matrix(p, p, 0.0), std::vector<bool>(p, false)};
  for (std::size_t c = 0; c < p; ++c) {
    ranks[c] = average_ranks(X.column(c));
    out.constant[c] = std::all_of(ranks[c].begin(), ranks[c].end(), [&](double r) { return r == ranks[c][0]; });
  }
  for (std::size_t a = 0; a < p; ++a) {
    out.rho(a, a) = 1.0;
    for (std::size_t b = a + 1; b < p; ++b) {
      const double r = out.constant[a] || out.constant[b] ? 0.0 : pearson(ranks[a], ranks[b]);
      out.rho(a, b) = out.rho(b, a) = r;
    }
  }
  return out;
}

ShapiroWilkResult shapiro_wilk(std::vector<double> x) {
  const std::size_t n = x.size();
  if (n < 3 || n > 5000) {
    fail(ErrorKind::SampleSizeOutOfRange, "Shapiro-Wilk needs 3..5000 values, got " + std::to_string(n));
  }
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (range < 1e-19) fail(ErrorKind::ConstantColumn, "Shapiro-Wilk undefined for constant data");

  static const double g[2] = {-2.273, .459};
  static const double c1[6] = {0., .221157, -.147981, -2.07119, 4.434685, -2.706056};
  static const double c2[6] = {0., .042981, -.293762, -1.752461, 5.682633, -3.582633};
  static const double c3[4] = {.544, -.39978, .025054, -6.714e-4};
  static const double c4[4] = {1.3822, -.77857, .062767, -.0020322};
  static const double c5[4] = {-1.5861, -.31082, -.083751, .0038915};
  static const double c6[3] = {-.4803, -.082676, .0030302};

  const std::size_t nn2 = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(nn2 + 1, 0.0);  // 1-based
  if (n == 3) {
    a[1] = std::sqrt(0.5);
  } else {
    const double an25 = an + .25;
    std::vector<double> m(nn2 + 1, 0.0);
    double summ2 = 0.0;
    for (std::size_t i = 1; i <= nn2; ++i) {
      m[i] = std_normal_quantile((static_cast<double>(i) - .375) / an25);
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - m[1] / ssumm2;
    std::size_t i1;
    double fac;
    if (n > 5) {
      i1 = 3;
      const double a2 = -m[2] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2. * (m[1] * m[1]) - 2. * (m[2] * m[2])) /
                      (1. - 2. * (a1 * a1) - 2. * (a2 * a2)));
      a[2] = a2;
    } else {
      i1 = 2;
      fac = std::sqrt((summ2 - 2. * (m[1] * m[1])) / (1. - 2. * (a1 * a1)));
    }
    a[1] = a1;
    for (std::size_t i = i1; i <= nn2; ++i) a[i] = -m[i] / fac;
  }

  // W is the squared correlation between the sorted sample and the
  // antisymmetric coefficient vector.
  std::vector<double> coef(n, 0.0);
  for (std::size_t i = 1; i <= nn2; ++i) {
    coef[i - 1] = -a[i];
    coef[n - i] = a[i];
  }
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = x[i] / range;
  const double sa = std::accumulate(coef.begin(), coef.end(), 0.0) / an;
  const double sx = std::accumulate(scaled.begin(), scaled.end(), 0.0) / an;
  double ssa = 0, ssx = 0, sax = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double asa = coef[i] - sa;
    const double xsx = scaled[i] - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  ShapiroWilkResult r;
  r.w = 1.0 - w1;

  if (n == 3) {
    const double pi6 = 1.90985931710274, stqr = 1.04719755119660;
    r.p = std::max(pi6 * (std::asin(std::sqrt(r.w)) - stqr), 0.0);
    return r;
  }
  double y = std::log(w1);
  const double xx = std::log(an);
  double m, s;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (y >= gamma) {
      r.p = 1e-99;
      return r;
    }
    y = -std::log(gamma - y);
    m = poly(c3, 4, an);
    s = std::exp(poly(c4, 4, an));
  } else {
    m = poly(c5, 4, xx);
    s = std::exp(poly(c6, 3, xx));
  }
  r.p = normal_upper_tail(y, m, s);
  return r;
}

BoxsMResult boxs_m(const Matrix& X, const std::vector<int>& y) {
  if (X.rows() != y.size()) fail(ErrorKind::LengthMismatch, "X and y lengths differ");
  const std::size_t p = X.cols();
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < y.size(); ++i) groups[y[i]].push_back(i);
  const double K = static_cast<double>(groups.size());
  if (groups.size() < 2) fail(ErrorKind::EmptyInput, "Box's M needs at least two classes");
  const double N = static_cast<double>(y.size());
  const double pd = static_cast<double>(p);

  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  double sum_logdet = 0.0, sum_inv = 0.0;
  for (const auto& [label, rows] : groups) {
    const double nk = static_cast<double>(rows.size());
    if (rows.size() <= p) {
      fail(ErrorKind::SingularCovariance, "class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                                              " rows for " + std::to_string(p) + " features");
    }
    Eigen::MatrixXd G(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t c = 0; c < p; ++c) G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = X(rows[i], c);
    const Eigen::RowVectorXd mean = G.colwise().mean();
    const Eigen::MatrixXd centered = G.rowwise() - mean;
    const Eigen::MatrixXd S = centered.transpose() * centered / (nk - 1.0);
    const auto ld = log_det(S);
    if (!ld) fail(ErrorKind::SingularCovariance, "covariance of class " + std::to_string(label) + " is singular");
    sum_logdet += (nk - 1.0) * *ld;
    sum_inv += 1.0 / (nk - 1.0);
    pooled += (nk - 1.0) * S;
  }
  pooled /= (N - K);
  const auto ld_pooled = log_det(pooled);
  if (!ld_pooled) fail(ErrorKind::SingularCovariance, "pooled covariance is singular");

  BoxsMResult r;
  r.m = (N - K) * *ld_pooled - sum_logdet;
  const double c = (2 * pd * pd + 3 * pd - 1) / (6 * (pd + 1) * (K - 1)) * (sum_inv - 1.0 / (N - K));
  r.chi2 = r.m * (1.0 - c);
  r.df = pd * (pd + 1) * (K - 1) / 2.0;
  r.p = r.chi2 <= 0 ? 1.0 : boost::math::gamma_q(r.df / 2.0, r.chi2 / 2.0);
  return r;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) fail(ErrorKind::EmptyInput, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> quantile_grid(std::vector<double> values, std::size_t grid_points) {
  if (grid_points == 0) return {};
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double q = grid_points == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(grid_points - 1);
    out.push_back(quantile(values, q));
  }
  return out;
}

PartialDependence partial_dependence(const LearnerModel& model, const Matrix& X, std::size_t feature,
                                     std::size_t grid_points) {
  if (X.cols() != model_width(model) || feature >= X.cols()) {
    fail(ErrorKind::DimensionMismatch, "feature index or matrix width does not match the model");
  }
  PartialDependence pd;
  pd.feature = feature;
  pd.grid = quantile_grid(X.column(feature), grid_points);
  pd.classes = model_classes(model);
  pd.curves.assign(pd.classes.size(), std::vector<double>(pd.grid.size(), 0.0));
  Matrix work = X;
  for (std::size_t g = 0; g < pd.grid.size(); ++g) {
    for (std::size_t r = 0; r < work.rows(); ++r) work(r, feature) = pd.grid[g];
    const Matrix proba = predict_proba(model, work);
    for (std::size_t c = 0; c < pd.classes.size(); ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < proba.rows(); ++r) s += proba(r, c);
      pd.curves[c][g] = s / static_cast<double>(proba.rows());
    }
  }
  return pd;
}

int RidgelineClass::band(double v) const {
  if (v < q1) return 1;
  if (v < q2) return 2;
  if (v < q3) return 3;
  return 4;
}

double silverman_bandwidth(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  const double iqr = quantile(values, 0.75) - quantile(values, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0)) spread = std::max(sd, iqr / 1.34);
  if (!(spread > 0)) spread = 1e-3 * std::max(1.0, std::abs(mean));
  return 0.9 * spread * std::pow(n, -0.2);
}

RidgelineSeries ridgeline_series(const std::string& feature, const std::map<int, std::vector<double>>& values_by_class,
                                 std::optional<double> bandwidth) {
  RidgelineSeries series{feature, {}};
  for (const auto& [label, values] : values_by_class) {
    if (values.size() < 2) {
      fail(ErrorKind::ClassTooSmall, "ridgeline for " + feature + " needs at least 2 values in class " +
                                         std::to_string(label));
    }
    RidgelineClass rc;
    rc.label = label;
    rc.bandwidth = bandwidth.value_or(silverman_bandwidth(values));
    if (!(rc.bandwidth > 0)) fail(ErrorKind::InvalidHyperparam, "bandwidth must be positive");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it - 3 * rc.bandwidth, hi = *hi_it + 3 * rc.bandwidth;
    const double dx = (hi - lo) / static_cast<double>(kRidgelineGridPoints - 1);
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < kRidgelineGridPoints; ++i) {
      const double x = lo + dx * static_cast<double>(i);
      double mass = 0.0;
      for (double v : values) {
        mass += normal_cdf((x + dx / 2 - v) / rc.bandwidth) - normal_cdf((x - dx / 2 - v) / rc.bandwidth);
      }
      rc.x.push_back(x);
      rc.density.push_back(mass / (n * dx));
    }
    rc.q1 = quantile(values, 0.25);
    rc.q2 = quantile(values, 0.5);
    rc.q3 = quantile(values, 0.75);
    series.classes.push_back(std::move(rc));
  }
  return series;
}

std::string ridgeline_csv(const std::vector<RidgelineSeries>& series) {
  std::ostringstream out;
  out << "feature,class,x,density,quartile_band\n";
  for (const auto& s : series)
    for (const auto& c : s.classes) {
      const std::string name = c.label >= 0 && c.label < kNumStages
                                   ? std::string(stage_name(stage_from_code(c.label)))
                                   : std::to_string(c.label);
      for (std::size_t i = 0; i < c.x.size(); ++i) {
        out << s.feature << ',' << name << ',' << format_double(c.x[i]) << ',' << format_double(c.density[i])
            << ',' << c.band(c.x[i]) << '\n';
      }
    }
  return out.str();
}

std::string ridgeline_svg(const RidgelineSeries& series) {
  static const char* kBandColors[4] = {"#c6dbef", "#6baed6", "#3182bd", "#08519c"};
  const double width = 640, ridge_h = 90, left = 110, right = 20, top = 30;
  const double height = top + ridge_h * static_cast<double>(series.classes.size()) + 40;
  double xmin = 0, xmax = 1, dmax = 0;
  bool first = true;
  for (const auto& c : series.classes) {
    if (c.x.empty()) continue;
    xmin = first ? c.x.front() : std::min(xmin, c.x.front());
    xmax = first ? c.x.back() : std::max(xmax, c.x.back());
    first = false;
    for (double d : c.density) dmax = std::max(dmax, d);
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (dmax <= 0) dmax = 1;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (width - left - right); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << series.feature << "</text>\n";
  for (std::size_t k = 0; k < series.classes.size(); ++k) {
    const auto& c = series.classes[k];
    const double base = top + ridge_h * static_cast<double>(k + 1);
    auto py = [&](double d) { return base - d / dmax * ridge_h * 1.4; };
    for (int band = 1; band <= 4; ++band) {
      std::ostringstream pts;
      bool any = false;
      double first_x = 0, last_x = 0;
      for (std::size_t i = 0; i < c.x.size(); ++i) {
        if (c.band(c.x[i]) != band) continue;
        if (!any) first_x = c.x[i];
        last_x = c.x[i];
        any = true;
        pts << fmt(px(c.x[i])) << ',' << fmt(py(c.density[i])) << ' ';
      }
      if (!any) continue;
      out << "<polygon fill=\"" << kBandColors[band - 1] << "\" stroke=\"none\" points=\"" << fmt(px(first_x)) << ','
          << fmt(base) << ' ' << pts.str() << fmt(px(last_x)) << ',' << fmt(base) << "\"/>\n";
    }
    std::ostringstream line;
    for (std::size_t i = 0; i < c.x.size(); ++i) line << fmt(px(c.x[i])) << ',' << fmt(py(c.density[i])) << ' ';
    out << "<polyline fill=\"none\" stroke=\"#222\" stroke-width=\"1\" points=\"" << line.str() << "\"/>\n";
    const std::string name = c.label >= 0 && c.label < kNumStages ? std::string(stage_name(stage_from_code(c.label)))
                                                                   : std::to_string(c.label);
    out << "<text x=\"8\" y=\"" << fmt(base - 4) << "\" font-family=\"sans-serif\" font-size=\"12\">" << name
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

DiagnosticsSummary run_diagnostics(const Dataset& ds) {
  DiagnosticsSummary s;
  s.column_names = ds.column_names;
  s.spearman = spearman_matrix(ds.X);
  for (std::size_t c = 0; c < ds.num_features(); ++c) {
    try {
      s.shapiro.emplace_back(shapiro_wilk(ds.X.column(c)));
    } catch (const Error& e) {
      s.shapiro.emplace_back(std::nullopt);
      s.notes.push_back(ds.column_names[c] + ": " + e.what());
    }
  }
  try {
    s.boxs_m = boxs_m(ds.X, ds.y);
  } catch (const Error& e) {
    s.notes.push_back(std::string("box's M: ") + e.what());
  }
  return s;
}

nlohmann::json diagnostics_to_json(const DiagnosticsSummary& s) {
  using nlohmann::json;
  json rho = json::array();
  for (std::size_t r = 0; r < s.spearman.rho.rows(); ++r) {
    auto row = s.spearman.rho.row(r);
    rho.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json shapiro = json::object();
  for (std::size_t c = 0; c < s.column_names.size(); ++c) {
    shapiro[s.column_names[c]] = s.shapiro[c] ? json{{"w", s.shapiro[c]->w}, {"p", s.shapiro[c]->p}} : json(nullptr);
  }
  json out{{"columns", s.column_names},
           {"spearman", rho},
           {"spearman_constant", s.spearman.constant},
           {"shapiro_wilk", shapiro},
           {"notes", s.notes}};
  out["boxs_m"] = s.boxs_m ? json{{"m", s.boxs_m->m}, {"chi2", s.boxs_m->chi2}, {"df", s.boxs_m->df}, {"p", s.boxs_m->p}}
                           : json(nullptr);
  return out;
}

}  // namespace osslc
