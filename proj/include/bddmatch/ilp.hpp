#pragma once

#include "bdd.hpp"

#include <numeric>
#include <optional>
#include <string>
#include <tuple>

namespace bddmatch {

    // Linear equality sum_k coefficients[k] * x_{variables[k]} == rhs.
    struct linear_row {
        std::vector<var_id> variables;
        std::vector<long long> coefficients;
        long long rhs = 0;

        bool operator==(const linear_row&) const = default;
    };

    // Position of a variable in the sweep order. Original variables use
    // (id, 0, 0); auxiliary variables created by splitting a constraint after
    // original variable a use (a, split, k) so that every sub-bdd stays sorted.
    struct sweep_key {
        std::uint32_t anchor = 0;
        std::uint32_t split = 0;
        std::uint32_t index = 0;
        auto operator<=>(const sweep_key&) const = default;
    };

    struct constraint {
        bdd diagram;
        std::optional<linear_row> row; // absent for sub-bdds produced by splitting
    };

    // 0-1 program: min c^T x subject to every constraint bdd accepting x.
    class ilp_instance {
        public:
            ilp_instance() = default;
            explicit ilp_instance(std::vector<double> costs) : costs_(std::move(costs))
            {
                keys_.resize(costs_.size());
                for(std::size_t i = 0; i < costs_.size(); ++i)
                    keys_[i] = {static_cast<std::uint32_t>(i), 0, 0};
                nr_original_ = costs_.size();
            }

            std::size_t nr_variables() const { return costs_.size(); }
            std::size_t nr_original_variables() const { return nr_original_; }
            std::size_t nr_constraints() const { return constraints_.size(); }

            std::span<const double> costs() const { return costs_; }
            double cost(var_id i) const { return costs_[i]; }
            void set_cost(var_id i, double c) { costs_[i] = c; }

            const std::vector<constraint>& constraints() const { return constraints_; }
            const bdd& diagram(std::size_t j) const { return constraints_[j].diagram; }

            const sweep_key& key(var_id i) const { return keys_[i]; }

            std::size_t add_constraint(const linear_row& row)
            {
                return add_constraint(build_equality_bdd(row.coefficients, row.rhs, row.variables), row);
            }

            std::size_t add_constraint(bdd b, std::optional<linear_row> row = std::nullopt)
            {
                for(var_id v : b.variables())
                    if(v >= costs_.size())
                        throw error("constraint references unknown variable " + std::to_string(v));
                constraints_.push_back({std::move(b), std::move(row)});
                return constraints_.size() - 1;
            }

            // Fresh variable placed in sweep order right after original variable `anchor`.
            var_id add_auxiliary_variable(double cost, sweep_key key)
            {
                costs_.push_back(cost);
                keys_.push_back(key);
                return static_cast<var_id>(costs_.size() - 1);
            }

            void replace_constraint(std::size_t j, constraint c) { constraints_[j] = std::move(c); }
            void remove_constraints_if(const std::vector<char>& drop)
            {
                std::vector<constraint> kept;
                for(std::size_t j = 0; j < constraints_.size(); ++j)
                    if(!drop[j]) kept.push_back(std::move(constraints_[j]));
                constraints_ = std::move(kept);
            }

            // Variables ordered by sweep key; every bdd lists its variables in this order.
            std::vector<var_id> sweep_order() const
            {
                std::vector<var_id> order(nr_variables());
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(), [&](var_id a, var_id b) { return keys_[a] < keys_[b]; });
                return order;
            }

            // (constraint, layer) incidences per variable, constraints ascending.
            std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> incidences() const
            {
                std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> inc(nr_variables());
                for(std::size_t j = 0; j < constraints_.size(); ++j) {
                    const auto vars = constraints_[j].diagram.variables();
                    for(std::size_t l = 0; l < vars.size(); ++l)
                        inc[vars[l]].emplace_back(static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(l));
                }
                return inc;
            }

            // Checks the ordering invariant; throws on violation.
            void validate() const
            {
                for(std::size_t j = 0; j < constraints_.size(); ++j) {
                    const auto vars = constraints_[j].diagram.variables();
                    for(std::size_t l = 1; l < vars.size(); ++l)
                        if(!(keys_[vars[l - 1]] < keys_[vars[l]]))
                            throw error("constraint " + std::to_string(j) + " does not list variables in sweep order");
                }
            }

            double objective(std::span<const char> x) const
            {
                double v = 0.0;
                for(std::size_t i = 0; i < costs_.size(); ++i)
                    if(x[i]) v += costs_[i];
                return v;
            }

            bool is_feasible(std::span<const char> x) const
            {
                std::vector<char> local;
                for(const constraint& c : constraints_) {
                    local.clear();
                    for(var_id v : c.diagram.variables())
                        local.push_back(x[v]);
                    if(!c.diagram.accepts(local))
                        return false;
                }
                return true;
            }

        private:
            std::vector<double> costs_;
            std::vector<sweep_key> keys_;
            std::vector<constraint> constraints_;
            std::size_t nr_original_ = 0;
    };

}
