#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fpc/graph.hpp"

namespace fpc {

using DensityParams = std::map<std::string, std::vector<double>>;

class DensityModel {
public:
    virtual ~DensityModel() = default;
    virtual double unnormalized(const double* x) const = 0;
    virtual int component(const double* x) const = 0;
    virtual double normalizer() const = 0;  // integral of the unnormalized density
    virtual bool separable() const { return false; }
    virtual double factor(int /*axis*/, double /*v*/) const { return 0.0; }
};

class SyntheticDensity {
public:
    SyntheticDensity(std::string name, std::vector<std::pair<double, double>> domain,
                     DensityParams params, std::shared_ptr<const DensityModel> model,
                     std::vector<std::string> component_names);

    const std::string& name() const { return name_; }
    int dim() const { return static_cast<int>(domain_.size()); }
    const std::vector<std::pair<double, double>>& domain() const { return domain_; }
    const DensityParams& params() const { return params_; }
    const std::vector<std::string>& component_names() const { return component_names_; }
    double domain_measure() const;
    double normalizer() const { return model_->normalizer(); }

    bool contains(const double* x) const;
    double operator()(const double* x) const;
    double operator()(double x) const;
    double operator()(double x, double y) const;
    int component(const double* x) const;  // throws outside the domain

    // Normalized one-dimensional factor of a product density.
    std::function<double(double)> factor(int axis) const;

    // Maximum by grid scan, inflated by 1 percent.
    double envelope() const;

    nlohmann::json to_json() const;

private:
    std::string name_;
    std::vector<std::pair<double, double>> domain_;
    DensityParams params_;
    std::shared_ptr<const DensityModel> model_;
    std::vector<std::string> component_names_;
};

std::vector<std::string> density_names();

SyntheticDensity density(const std::string& name, const DensityParams& params = {});

PointCloud sample(const SyntheticDensity& rho, Index n, std::uint64_t seed);

int ground_truth(const SyntheticDensity& rho, const double* point);
std::vector<int> ground_truth(const SyntheticDensity& rho, const PointCloud& cloud);

// Uniform double in [0, 1) with 53 random bits.
double uniform01(std::uint64_t bits);

}  // namespace fpc
