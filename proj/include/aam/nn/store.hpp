#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "aam/nn/matrix.hpp"
#include "aam/nn/tape.hpp"
#include "aam/util/rng.hpp"

#include "json.hpp"

namespace aam::nn {

// Ordered collection of named parameters. Iteration order is the parameter
// name order, which keeps optimizer updates and checkpoints deterministic.
class ParamStore {
public:
    Parameter& create(const std::string& name, int rows, int cols) {
        auto [it, fresh] = params_.try_emplace(name, nullptr);
        if (!fresh) throw std::logic_error("duplicate parameter: " + name);
        it->second = std::make_unique<Parameter>(name, Matrix(rows, cols));
        return *it->second;
    }

    // Glorot-style uniform init on a = sqrt(6 / (fan_in + fan_out)).
    Parameter& create_glorot(const std::string& name, int rows, int cols, util::Rng& rng) {
        Parameter& p = create(name, rows, cols);
        double a = std::sqrt(6.0 / (rows + cols));
        for (double& x : p.value.d) x = rng.uniform(-a, a);
        return p;
    }

    Parameter& get(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw std::out_of_range("no parameter: " + name);
        return *it->second;
    }

    bool has(const std::string& name) const { return params_.count(name) > 0; }

    std::vector<Parameter*> all() {
        std::vector<Parameter*> out;
        out.reserve(params_.size());
        for (auto& [k, v] : params_) out.push_back(v.get());
        return out;
    }

    size_t value_count() const {
        size_t n = 0;
        for (auto& [k, v] : params_) n += v->value.size();
        return n;
    }

    void zero_grads() {
        for (auto& [k, v] : params_) v->zero_grad();
    }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (auto& [k, v] : params_)
            j[k] = {{"rows", v->value.rows}, {"cols", v->value.cols}, {"values", v->value.d}};
        return j;
    }

    // Loads values into existing parameters; shapes must match exactly.
    void load_json(const nlohmann::json& j) {
        for (auto& [k, v] : params_) {
            if (!j.contains(k)) throw std::runtime_error("checkpoint missing parameter: " + k);
            const auto& e = j.at(k);
            if (e.at("rows") != v->value.rows || e.at("cols") != v->value.cols)
                throw std::runtime_error("checkpoint shape mismatch: " + k);
            v->value.d = e.at("values").get<std::vector<double>>();
        }
    }

private:
    std::map<std::string, std::unique_ptr<Parameter>> params_;
};

}  // namespace aam::nn
