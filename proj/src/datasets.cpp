#include "fpc/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace fpc {

namespace {

double normal_pdf(double z, double sigma)
{
    return std::exp(-0.5 * z * z / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double normal_mass(double lo, double hi, double mu, double sigma)
{
    const double s = sigma * std::sqrt(2.0);
    return 0.5 * (std::erf((hi - mu) / s) - std::erf((lo - mu) / s));
}

std::vector<double> param_or(const DensityParams& p, const std::string& key, std::vector<double> fallback)
{
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

double scalar_or(const DensityParams& p, const std::string& key, double fallback)
{
    auto it = p.find(key);
    if (it == p.end()) return fallback;
    if (it->second.size() != 1) throw InvalidInput("density parameter " + key + " expects one value");
    return it->second[0];
}

class Mixture1D : public DensityModel {
public:
    Mixture1D(double a, double b, std::vector<double> w, std::vector<double> mu, std::vector<double> sd)
        : a_(a), b_(b), w_(std::move(w)), mu_(std::move(mu)), sd_(std::move(sd))
    {
        if (w_.empty() || w_.size() != mu_.size() || w_.size() != sd_.size())
            throw InvalidInput("mixture weights, means and sigmas must have equal nonzero length");
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (!(w_[i] > 0.0) || !(sd_[i] > 0.0)) throw InvalidInput("mixture weights and sigmas must be positive");
        norm_ = 0.0;
        for (std::size_t i = 0; i < w_.size(); ++i) norm_ += w_[i] * normal_mass(a_, b_, mu_[i], sd_[i]);
    }
    double unnormalized(const double* x) const override
    {
        double s = 0.0;
        for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * normal_pdf(x[0] - mu_[i], sd_[i]);
        return s;
    }
    int component(const double* x) const override
    {
        int best = 0;
        double top = -1.0;
        for (std::size_t i = 0; i < w_.size(); ++i) {
            double v = w_[i] * normal_pdf(x[0] - mu_[i], sd_[i]);
            if (v > top) {
                top = v;
                best = static_cast<int>(i);
            }
        }
        return best;
    }
    double normalizer() const override { return norm_; }

private:
    double a_, b_;
    std::vector<double> w_, mu_, sd_;
    double norm_;
};

class Plateau1D : public DensityModel {
public:
    Plateau1D(double a, double b, std::vector<double> breaks, std::vector<double> heights)
        : edges_{a}, heights_(std::move(heights))
    {
        for (double x : breaks) edges_.push_back(x);
        edges_.push_back(b);
        if (heights_.size() + 1 != edges_.size())
            throw InvalidInput("plateau density needs one more height than breakpoints");
        norm_ = 0.0;
        for (std::size_t i = 0; i < heights_.size(); ++i) {
            if (!(edges_[i] < edges_[i + 1])) throw InvalidInput("plateau breakpoints must increase inside the domain");
            if (!(heights_[i] >= 0.0)) throw InvalidInput("plateau heights must be nonnegative");
            norm_ += heights_[i] * (edges_[i + 1] - edges_[i]);
        }
        if (!(norm_ > 0.0)) throw InvalidInput("plateau density has no mass");
    }
    double unnormalized(const double* x) const override { return heights_[static_cast<std::size_t>(component(x))]; }
    int component(const double* x) const override
    {
        auto it = std::upper_bound(edges_.begin() + 1, edges_.end() - 1, x[0]);
        return static_cast<int>(it - edges_.begin()) - 1;
    }
    double normalizer() const override { return norm_; }

private:
    std::vector<double> edges_, heights_;
    double norm_;
};

class BlueSky : public DensityModel {
public:
    BlueSky(double sx, double offset, double sy) : sx_(sx), off_(offset), sy_(sy)
    {
        if (!(sx > 0.0 && sy > 0.0)) throw InvalidInput("blue_sky sigmas must be positive");
        mx_ = normal_mass(-1.5, 1.5, 0.0, sx_);
        my_ = normal_mass(-1.0, 1.0, off_, sy_) + normal_mass(-1.0, 1.0, -off_, sy_);
    }
    double fx(double x) const { return normal_pdf(x, sx_); }
    double fy(double y) const { return normal_pdf(y - off_, sy_) + normal_pdf(y + off_, sy_); }
    double unnormalized(const double* x) const override { return fx(x[0]) * fy(x[1]); }
    int component(const double* x) const override { return x[1] < 0.0 ? 0 : 1; }
    double normalizer() const override { return mx_ * my_; }
    bool separable() const override { return true; }
    double factor(int axis, double v) const override { return axis == 0 ? fx(v) / mx_ : fy(v) / my_; }

private:
    double sx_, off_, sy_, mx_, my_;
};

class ThreeBlobs : public DensityModel {
public:
    ThreeBlobs(std::vector<double> centers, double radius) : c_(std::move(centers)), r_(radius)
    {
        if (c_.size() != 6) throw InvalidInput("three_blobs centers expects 6 values");
        if (!(r_ > 0.0)) throw InvalidInput("three_blobs radius must be positive");
        std::vector<double> cuts{-1.0, 1.0, -wide_h, wide_h, -narrow_h, narrow_h};
        for (int i = 0; i < 3; ++i) {
            cuts.push_back(c_[2 * i + 1] - r_);
            cuts.push_back(c_[2 * i + 1] + r_);
        }
        std::sort(cuts.begin(), cuts.end());
        double area = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double lo = std::clamp(cuts[i], -1.0, 1.0), hi = std::clamp(cuts[i + 1], -1.0, 1.0);
            if (hi > lo) area += integrate(lo, hi);
        }
        const double narrow_area = (std::min(narrow_x1, 1.5) - std::max(narrow_x0, -1.5)) * 2.0 * narrow_h;
        norm_ = area + (narrow_height - 1.0) * narrow_area;
    }
    double unnormalized(const double* p) const override
    {
        const double x = p[0], y = p[1];
        if (x >= narrow_x0 && x <= narrow_x1 && std::abs(y) <= narrow_h) return narrow_height;
        if (x >= wide_x0 && x <= wide_x1 && std::abs(y) <= wide_h) return 1.0;
        for (int i = 0; i < 3; ++i) {
            double dx = x - c_[2 * i], dy = y - c_[2 * i + 1];
            if (dx * dx + dy * dy <= r_ * r_) return 1.0;
        }
        return 0.0;
    }
    int component(const double* p) const override
    {
        int best = 0;
        double top = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i) {
            double dx = p[0] - c_[2 * i], dy = p[1] - c_[2 * i + 1];
            double d = dx * dx + dy * dy;
            if (d < top) {
                top = d;
                best = i;
            }
        }
        return best;
    }
    double normalizer() const override { return norm_; }

    // Length of the support along the horizontal line at height y.
    double line_measure(double y) const
    {
        std::vector<std::pair<double, double>> iv;
        for (int i = 0; i < 3; ++i) {
            double dy = y - c_[2 * i + 1];
            if (std::abs(dy) < r_) {
                double half = std::sqrt(r_ * r_ - dy * dy);
                iv.emplace_back(c_[2 * i] - half, c_[2 * i] + half);
            }
        }
        if (std::abs(y) <= wide_h) iv.emplace_back(wide_x0, wide_x1);
        if (std::abs(y) <= narrow_h) iv.emplace_back(narrow_x0, narrow_x1);
        for (auto& [lo, hi] : iv) {
            lo = std::clamp(lo, -1.5, 1.5);
            hi = std::clamp(hi, -1.5, 1.5);
        }
        std::sort(iv.begin(), iv.end());
        double total = 0.0, cur_lo = 0.0, cur_hi = -1e300;
        for (auto [lo, hi] : iv) {
            if (lo > cur_hi) {
                if (cur_hi > cur_lo) total += cur_hi - cur_lo;
                cur_lo = lo;
                cur_hi = hi;
            } else {
                cur_hi = std::max(cur_hi, hi);
            }
        }
        if (cur_hi > cur_lo) total += cur_hi - cur_lo;
        return total;
    }

    static constexpr double wide_x0 = 0.25, wide_x1 = 0.75, wide_h = 0.125;
    static constexpr double narrow_x0 = -0.75, narrow_x1 = 0.25, narrow_h = 0.04, narrow_height = 4.0;

private:
    static double simpson(double a, double fa, double b, double fb, double, double fm)
    {
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    }
    double adapt(double a, double fa, double b, double fb, double m, double fm, double whole, double tol,
                 int depth) const
    {
        double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        double flm = line_measure(lm), frm = line_measure(rm);
        double left = simpson(a, fa, m, fm, lm, flm), right = simpson(m, fm, b, fb, rm, frm);
        double delta = left + right - whole;
        if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
        return adapt(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
               adapt(m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
    }
    double integrate(double a, double b) const
    {
        // open at both ends so the breakpoint values themselves are never sampled
        const double tiny = 1e-15 * (b - a);
        double lo = a + tiny, hi = b - tiny, m = 0.5 * (lo + hi);
        double fa = line_measure(lo), fb = line_measure(hi), fm = line_measure(m);
        return adapt(lo, fa, hi, fb, m, fm, simpson(lo, fa, hi, fb, m, fm), 1e-13, 60);
    }

    std::vector<double> c_;
    double r_;
    double norm_;
};

}  // namespace

double uniform01(std::uint64_t bits)
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

SyntheticDensity::SyntheticDensity(std::string name, std::vector<std::pair<double, double>> domain,
                                   DensityParams params, std::shared_ptr<const DensityModel> model,
                                   std::vector<std::string> component_names)
    : name_(std::move(name)), domain_(std::move(domain)), params_(std::move(params)), model_(std::move(model)),
      component_names_(std::move(component_names))
{
}

double SyntheticDensity::domain_measure() const
{
    double m = 1.0;
    for (auto [lo, hi] : domain_) m *= hi - lo;
    return m;
}

bool SyntheticDensity::contains(const double* x) const
{
    for (std::size_t i = 0; i < domain_.size(); ++i)
        if (!(x[i] >= domain_[i].first && x[i] <= domain_[i].second)) return false;
    return true;
}

double SyntheticDensity::operator()(const double* x) const
{
    if (!contains(x)) return 0.0;
    return model_->unnormalized(x) / model_->normalizer();
}

double SyntheticDensity::operator()(double x) const
{
    if (dim() != 1) throw InvalidInput("density " + name_ + " is not one-dimensional");
    return (*this)(&x);
}

double SyntheticDensity::operator()(double x, double y) const
{
    if (dim() != 2) throw InvalidInput("density " + name_ + " is not two-dimensional");
    double p[2] = {x, y};
    return (*this)(p);
}

int SyntheticDensity::component(const double* x) const
{
    if (!contains(x)) throw InvalidInput("point lies outside the domain of " + name_);
    return model_->component(x);
}

std::function<double(double)> SyntheticDensity::factor(int axis) const
{
    if (!model_->separable()) throw UnsupportedParameter("density " + name_ + " is not a product density");
    if (axis < 0 || axis >= dim()) throw InvalidInput("axis out of range");
    auto model = model_;
    return [model, axis](double v) { return model->factor(axis, v); };
}

double SyntheticDensity::envelope() const
{
    double top = 0.0;
    if (dim() == 1) {
        const int m = 10000;
        auto [a, b] = domain_[0];
        for (int i = 0; i <= m; ++i) {
            double x = a + (b - a) * i / m;
            top = std::max(top, model_->unnormalized(&x));
        }
    } else {
        const int m = 600;
        auto [a, b] = domain_[0];
        auto [c, d] = domain_[1];
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j <= m; ++j) {
                double p[2] = {a + (b - a) * i / m, c + (d - c) * j / m};
                top = std::max(top, model_->unnormalized(p));
            }
    }
    if (!(top > 0.0) || !std::isfinite(top)) throw NumericalError("envelope scan found no positive density");
    return 1.01 * top;
}

nlohmann::json SyntheticDensity::to_json() const
{
    nlohmann::json j;
    j["name"] = name_;
    j["dim"] = dim();
    j["domain"] = domain_;
    j["params"] = params_;
    j["normalizer"] = normalizer();
    j["components"] = component_names_;
    return j;
}

std::vector<std::string> density_names()
{
    return {"two_bump", "uniform", "deep_valley", "three_bump", "mesa", "blue_sky", "three_blobs"};
}

SyntheticDensity density(const std::string& name, const DensityParams& params)
{
    const std::pair<double, double> line{-1.5, 1.5};
    auto mixture = [&](std::vector<double> w, std::vector<double> mu, std::vector<double> sd,
                       std::vector<std::string> names) {
        DensityParams p{{"weights", param_or(params, "weights", w)},
                        {"means", param_or(params, "means", mu)},
                        {"sigmas", param_or(params, "sigmas", sd)}};
        auto model = std::make_shared<Mixture1D>(line.first, line.second, p["weights"], p["means"], p["sigmas"]);
        if (p["weights"].size() != names.size()) {
            names.clear();
            for (std::size_t i = 0; i < p["weights"].size(); ++i) names.push_back("c" + std::to_string(i));
        }
        return SyntheticDensity(name, {line}, p, model, names);
    };
    auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [k, v] : params) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || k == a;
            if (!ok) throw InvalidInput("density " + name + " has no parameter '" + k + "'");
        }
    };

    if (name == "two_bump") {
        reject_unknown({"weights", "means", "sigmas"});
        return mixture({4.0, 1.0}, {-0.5, 1.25}, {0.5, 0.25}, {"left", "right"});
    }
    if (name == "deep_valley") {
        reject_unknown({"weights", "means", "sigmas"});
        return mixture({7.0, 3.0}, {-0.5, 1.25}, {0.5, 0.15}, {"left", "right"});
    }
    if (name == "three_bump") {
        reject_unknown({"weights", "means", "sigmas"});
        return mixture({1.0, 1.0, 4.0}, {0.5, 1.1, -1.0}, {0.1, 0.1, 0.4}, {"c0", "c1", "c2"});
    }
    if (name == "uniform") {
        reject_unknown({});
        auto model = std::make_shared<Plateau1D>(line.first, line.second, std::vector<double>{},
                                                 std::vector<double>{1.0});
        return SyntheticDensity(name, {line}, {}, model, {"all"});
    }
    if (name == "mesa") {
        reject_unknown({"breaks", "heights"});
        DensityParams p{{"breaks", param_or(params, "breaks", {-0.5, 0.5})},
                        {"heights", param_or(params, "heights", {2.0, 1.0, 2.0})}};
        auto model = std::make_shared<Plateau1D>(line.first, line.second, p["breaks"], p["heights"]);
        std::vector<std::string> names;
        for (std::size_t i = 0; i < p["heights"].size(); ++i) names.push_back("plateau" + std::to_string(i));
        return SyntheticDensity(name, {line}, p, model, names);
    }
    if (name == "blue_sky") {
        reject_unknown({"sigma_x", "offset", "sigma_y"});
        DensityParams p{{"sigma_x", {scalar_or(params, "sigma_x", 1.0)}},
                        {"offset", {scalar_or(params, "offset", 0.32)}},
                        {"sigma_y", {scalar_or(params, "sigma_y", 0.09)}}};
        auto model = std::make_shared<BlueSky>(p["sigma_x"][0], p["offset"][0], p["sigma_y"][0]);
        return SyntheticDensity(name, {line, {-1.0, 1.0}}, p, model, {"bottom", "top"});
    }
    if (name == "three_blobs") {
        reject_unknown({"centers", "radius"});
        DensityParams p{{"centers", param_or(params, "centers", {-1.0, 0.0, 0.0, 0.0, 1.0, 0.0})},
                        {"radius", {scalar_or(params, "radius", 0.25)}}};
        auto model = std::make_shared<ThreeBlobs>(p["centers"], p["radius"][0]);
        return SyntheticDensity(name, {line, {-1.0, 1.0}}, p, model, {"left", "middle", "right"});
    }
    throw InvalidInput("unknown density '" + name + "'");
}

PointCloud sample(const SyntheticDensity& rho, Index n, std::uint64_t seed)
{
    if (n < 1) throw InvalidInput("sample size must be positive");
    const double env = rho.envelope();
    const double norm = rho.normalizer();
    const int dim = rho.dim();
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd pts(n, dim);
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(n));
    double p[2];
    Index have = 0;
    long tries = 0;
    while (have < n) {
        if (++tries > 1000L * n + 1000000L) throw NumericalError("rejection sampler made no progress");
        for (int d = 0; d < dim; ++d) {
            auto [lo, hi] = rho.domain()[static_cast<std::size_t>(d)];
            p[d] = lo + (hi - lo) * uniform01(rng());
        }
        double u = uniform01(rng()) * env;
        if (u < rho(p) * norm) {
            for (int d = 0; d < dim; ++d) pts(have, d) = p[d];
            labels.push_back(rho.component(p));
            ++have;
        }
    }
    return PointCloud(std::move(pts), std::move(labels), seed);
}

int ground_truth(const SyntheticDensity& rho, const double* point)
{
    return rho.component(point);
}

std::vector<int> ground_truth(const SyntheticDensity& rho, const PointCloud& cloud)
{
    if (cloud.dim() != rho.dim()) throw InvalidInput("cloud dimension does not match density");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(cloud.size()));
    double p[2];
    for (Index i = 0; i < cloud.size(); ++i) {
        for (int d = 0; d < cloud.dim(); ++d) p[d] = cloud.points(i, d);
        out.push_back(rho.component(p));
    }
    return out;
}

}  // namespace fpc
