#pragma once

#include "ilp.hpp"
#include "parallel.hpp"

#include <cmath>

namespace bddmatch {

    enum class sweep_direction { forward, backward };

    // Lagrangian dual of an ilp_instance: one cost vector lambda^j per
    // constraint with sum_j lambda_i^j = c_i for every variable i. The dual
    // objective sum_j min_{s in S_j} s^T lambda^j is a lower bound on the ILP.
    //
    // All lambda^j live in one flat vector, laid out constraint by constraint
    // and layer by layer; this is also the coordinate system of subgradients
    // and quasi-Newton directions. The instance must outlive the state.
    class dual_state {
        public:
            struct incidence {
                std::uint32_t constraint;
                std::uint32_t layer;
                std::uint32_t flat;
            };

            explicit dual_state(const ilp_instance& instance, int threads = 1);

            const ilp_instance& instance() const { return *instance_; }
            std::size_t size() const { return lambda_.size(); }
            int threads() const { return threads_; }
            void set_threads(int t) { threads_ = std::max(1, t); }

            std::span<const double> lambda() const { return lambda_; }
            std::span<const double> lambda(std::size_t j) const
            {
                return {lambda_.data() + lambda_offset_[j], lambda_offset_[j + 1] - lambda_offset_[j]};
            }
            std::size_t lambda_offset(std::size_t j) const { return lambda_offset_[j]; }

            // Replaces all duals; the caller is responsible for dual feasibility.
            void set_lambda(std::span<const double> lambda);
            // lambda += step * direction
            void add_scaled(std::span<const double> direction, double step);

            std::span<const incidence> incidences(var_id i) const
            {
                return {incidences_.data() + incidence_offset_[i], incidence_offset_[i + 1] - incidence_offset_[i]};
            }
            std::span<const var_id> sweep_order() const { return order_; }

            // Variables in no constraint are fixed to their cheaper value.
            const std::vector<var_id>& unconstrained_variables() const { return unconstrained_; }
            double constant_term() const { return constant_; }

            double lower_bound() const;
            // E(lambda) for an arbitrary flat dual vector, without touching cached state.
            double objective_at(std::span<const double> lambda) const;
            std::vector<double> subproblem_minima() const;

            // Flat indicator vector of every subproblem's minimiser.
            std::vector<double> subgradient() const;
            // Min-marginals for every flat coordinate at the current duals.
            std::vector<min_marginal_pair> min_marginals() const;

            void mma_pass(sweep_direction dir);
            // One forward and one backward pass.
            void mma_iteration()
            {
                mma_pass(sweep_direction::forward);
                mma_pass(sweep_direction::backward);
            }

            // max_i |sum_j lambda_i^j - c_i| / (1 + |c_i|)
            double max_feasibility_violation() const;

        private:
            void recompute_forward();
            void recompute_backward();
            void average_variable(var_id i);

            std::span<double> fwd(std::size_t j) { return {fwd_.data() + node_offset_[j], node_offset_[j + 1] - node_offset_[j]}; }
            std::span<double> bwd(std::size_t j) { return {bwd_.data() + node_offset_[j], node_offset_[j + 1] - node_offset_[j]}; }
            std::span<const double> fwd(std::size_t j) const { return {fwd_.data() + node_offset_[j], node_offset_[j + 1] - node_offset_[j]}; }
            std::span<const double> bwd(std::size_t j) const { return {bwd_.data() + node_offset_[j], node_offset_[j + 1] - node_offset_[j]}; }

            const ilp_instance* instance_;
            int threads_;
            std::vector<double> lambda_;
            std::vector<std::size_t> lambda_offset_;
            std::vector<std::size_t> node_offset_;
            std::vector<double> fwd_, bwd_;
            bool fwd_valid_ = false;
            bool bwd_valid_ = false;
            std::vector<double> subproblem_min_;
            bool minima_valid_ = false;

            std::vector<incidence> incidences_;
            std::vector<std::size_t> incidence_offset_;
            std::vector<var_id> order_;
            std::vector<var_id> unconstrained_;
            double constant_ = 0.0;

            std::vector<min_marginal_pair> scratch_mm_;
    };

    ////////////////////
    // implementation //
    ////////////////////

    inline dual_state::dual_state(const ilp_instance& instance, int threads)
        : instance_(&instance), threads_(std::max(1, threads))
    {
        instance.validate();
        const std::size_t nr_c = instance.nr_constraints();
        lambda_offset_.resize(nr_c + 1, 0);
        node_offset_.resize(nr_c + 1, 0);
        for(std::size_t j = 0; j < nr_c; ++j) {
            lambda_offset_[j + 1] = lambda_offset_[j] + instance.diagram(j).nr_layers();
            node_offset_[j + 1] = node_offset_[j] + instance.diagram(j).nr_nodes();
        }
        lambda_.resize(lambda_offset_.back());
        fwd_.resize(node_offset_.back());
        bwd_.resize(node_offset_.back());
        subproblem_min_.resize(nr_c);

        const auto inc = instance.incidences();
        incidence_offset_.resize(instance.nr_variables() + 1, 0);
        for(std::size_t i = 0; i < inc.size(); ++i) {
            incidence_offset_[i + 1] = incidence_offset_[i] + inc[i].size();
            for(auto [j, l] : inc[i])
                incidences_.push_back({j, l, static_cast<std::uint32_t>(lambda_offset_[j] + l)});
        }
        // uniform split of every cost over the subproblems containing it
        for(var_id i = 0; i < instance.nr_variables(); ++i) {
            const auto incs = incidences(i);
            const double c = instance.cost(i);
            if(incs.empty()) {
                unconstrained_.push_back(i);
                constant_ += std::min(0.0, c);
                continue;
            }
            for(const incidence& e : incs)
                lambda_[e.flat] = c / static_cast<double>(incs.size());
        }
        order_ = instance.sweep_order();
        recompute_backward();
    }

    inline void dual_state::set_lambda(std::span<const double> lambda)
    {
        assert(lambda.size() == lambda_.size());
        std::copy(lambda.begin(), lambda.end(), lambda_.begin());
        fwd_valid_ = bwd_valid_ = minima_valid_ = false;
        recompute_backward();
    }

    inline void dual_state::add_scaled(std::span<const double> direction, double step)
    {
        assert(direction.size() == lambda_.size());
        for(std::size_t k = 0; k < lambda_.size(); ++k)
            lambda_[k] += step * direction[k];
        fwd_valid_ = bwd_valid_ = minima_valid_ = false;
        recompute_backward();
    }

    inline void dual_state::recompute_backward()
    {
        const ilp_instance& inst = *instance_;
        parallel_for(inst.nr_constraints(), threads_, [&](std::size_t j) {
            auto b = bwd(j);
            detail::backward_distances(inst.diagram(j), lambda(j), b);
            subproblem_min_[j] = b[0];
        });
        bwd_valid_ = true;
        minima_valid_ = true;
    }

    inline void dual_state::recompute_forward()
    {
        const ilp_instance& inst = *instance_;
        parallel_for(inst.nr_constraints(), threads_, [&](std::size_t j) {
            detail::forward_distances(inst.diagram(j), lambda(j), fwd(j));
        });
        fwd_valid_ = true;
    }

    inline double dual_state::lower_bound() const
    {
        if(!minima_valid_)
            const_cast<dual_state*>(this)->recompute_backward();
        double lb = constant_;
        for(double m : subproblem_min_)
            lb += m;
        return lb;
    }

    inline std::vector<double> dual_state::subproblem_minima() const
    {
        lower_bound();
        return subproblem_min_;
    }

    inline double dual_state::objective_at(std::span<const double> lambda) const
    {
        assert(lambda.size() == lambda_.size());
        const ilp_instance& inst = *instance_;
        std::vector<double> minima(inst.nr_constraints());
        parallel_for(inst.nr_constraints(), threads_, [&](std::size_t j) {
            const bdd& b = inst.diagram(j);
            std::vector<double> dist(b.nr_nodes());
            detail::backward_distances(b, lambda.subspan(lambda_offset_[j], b.nr_layers()), dist);
            minima[j] = dist[0];
        });
        double e = constant_;
        for(double m : minima)
            e += m;
        return e;
    }

    inline std::vector<double> dual_state::subgradient() const
    {
        const ilp_instance& inst = *instance_;
        std::vector<double> g(lambda_.size(), 0.0);
        parallel_for(inst.nr_constraints(), threads_, [&](std::size_t j) {
            const auto r = min_assignment(inst.diagram(j), lambda(j));
            for(std::size_t l = 0; l < r.argmin.size(); ++l)
                g[lambda_offset_[j] + l] = r.argmin[l] ? 1.0 : 0.0;
        });
        return g;
    }

    inline std::vector<min_marginal_pair> dual_state::min_marginals() const
    {
        const ilp_instance& inst = *instance_;
        std::vector<min_marginal_pair> mm(lambda_.size());
        parallel_for(inst.nr_constraints(), threads_, [&](std::size_t j) {
            const auto local = bddmatch::min_marginals(inst.diagram(j), lambda(j));
            std::copy(local.begin(), local.end(), mm.begin() + lambda_offset_[j]);
        });
        return mm;
    }

    inline double dual_state::max_feasibility_violation() const
    {
        double worst = 0.0;
        for(var_id i = 0; i < instance_->nr_variables(); ++i) {
            const auto incs = incidences(i);
            if(incs.empty()) continue;
            double s = 0.0;
            for(const incidence& e : incs)
                s += lambda_[e.flat];
            const double c = instance_->cost(i);
            worst = std::max(worst, std::abs(s - c) / (1.0 + std::abs(c)));
        }
        return worst;
    }

    // Equalises the min-marginal differences of variable i over its
    // subproblems; expects scratch_mm_ to hold the current min-marginals.
    inline void dual_state::average_variable(var_id i)
    {
        const auto incs = incidences(i);
        const std::size_t nr = incs.size();
        if(nr < 2)
            return;
        bool forced0 = false, forced1 = false;
        std::size_t nr_free = 0;
        double sum_free = 0.0;
        for(std::size_t k = 0; k < nr; ++k) {
            const min_marginal_pair& mm = scratch_mm_[k];
            if(!mm.feasible1) forced0 = true;
            else if(!mm.feasible0) forced1 = true;
            else { ++nr_free; sum_free += mm.difference(); }
        }
        if(!forced0 && !forced1) {
            const double avg = sum_free / static_cast<double>(nr);
            for(std::size_t k = 0; k < nr; ++k)
                lambda_[incs[k].flat] += avg - scratch_mm_[k].difference();
            return;
        }
        // Conflicting forcings mean the instance is infeasible; nothing sensible to move.
        if((forced0 && forced1) || nr_free == 0)
            return;
        // Free subproblems move to a target on the forced side; the forcing
        // subproblems absorb the transferred cost, which keeps sum_j lambda_i^j fixed.
        const double avg = sum_free / static_cast<double>(nr_free);
        const double target = forced1 ? std::min(avg, 0.0) : std::max(avg, 0.0);
        double transferred = 0.0;
        for(std::size_t k = 0; k < nr; ++k) {
            if(scratch_mm_[k].forced()) continue;
            const double delta = target - scratch_mm_[k].difference();
            lambda_[incs[k].flat] += delta;
            transferred -= delta;
        }
        const std::size_t nr_forced = nr - nr_free;
        for(std::size_t k = 0; k < nr; ++k)
            if(scratch_mm_[k].forced())
                lambda_[incs[k].flat] += transferred / static_cast<double>(nr_forced);
    }

    // Visits variables in sweep order (reversed for backward). Within one
    // bdd, lambda only changes at layers already visited, so the cached
    // distances of the unvisited side stay exact and the bound cannot drop.
    inline void dual_state::mma_pass(sweep_direction dir)
    {
        const ilp_instance& inst = *instance_;
        const bool forward = dir == sweep_direction::forward;
        if(forward && !bwd_valid_) recompute_backward();
        if(!forward && !fwd_valid_) recompute_forward();

        if(forward) {
            for(std::size_t j = 0; j < inst.nr_constraints(); ++j)
                fwd(j)[0] = 0.0;
        }
        const double inf = std::numeric_limits<double>::infinity();
        const std::size_t nr_vars = order_.size();
        for(std::size_t step = 0; step < nr_vars; ++step) {
            const var_id i = forward ? order_[step] : order_[nr_vars - 1 - step];
            const auto incs = incidences(i);
            if(incs.empty())
                continue;
            scratch_mm_.resize(incs.size());
            for(std::size_t k = 0; k < incs.size(); ++k) {
                const incidence& e = incs[k];
                scratch_mm_[k] = detail::layer_min_marginals(inst.diagram(e.constraint), e.layer, lambda_[e.flat],
                                                             fwd(e.constraint), bwd(e.constraint));
            }
            average_variable(i);
            for(const incidence& e : incs) {
                const bdd& b = inst.diagram(e.constraint);
                const std::size_t l = e.layer;
                const double c = lambda_[e.flat];
                auto f = fwd(e.constraint);
                auto d = bwd(e.constraint);
                if(forward) {
                    if(l + 1 < b.nr_layers()) {
                        for(std::size_t w = b.layer_begin(l + 1); w < b.layer_end(l + 1); ++w)
                            f[w] = inf;
                        for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v) {
                            const bdd::node& n = b[v];
                            if(n.lo != bdd::false_terminal) f[n.lo] = std::min(f[n.lo], f[v]);
                            if(n.hi != bdd::false_terminal) f[n.hi] = std::min(f[n.hi], f[v] + c);
                        }
                    } else {
                        double best = inf;
                        for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v) {
                            const bdd::node& n = b[v];
                            if(n.lo == bdd::true_terminal) best = std::min(best, f[v]);
                            if(n.hi == bdd::true_terminal) best = std::min(best, f[v] + c);
                        }
                        subproblem_min_[e.constraint] = best;
                    }
                } else {
                    auto dist = [&](std::uint32_t t) { return t == bdd::true_terminal ? 0.0 : d[t]; };
                    for(std::size_t v = b.layer_begin(l); v < b.layer_end(l); ++v) {
                        const bdd::node& n = b[v];
                        double best = inf;
                        if(n.lo != bdd::false_terminal) best = dist(n.lo);
                        if(n.hi != bdd::false_terminal) best = std::min(best, c + dist(n.hi));
                        d[v] = best;
                    }
                    if(l == 0)
                        subproblem_min_[e.constraint] = d[0];
                }
            }
        }
        if(forward) {
            fwd_valid_ = true;
            bwd_valid_ = false;
        } else {
            bwd_valid_ = true;
            fwd_valid_ = false;
        }
        minima_valid_ = true;
    }

}
