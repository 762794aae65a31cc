#pragma once

#include "ilp.hpp"

#include <functional>

namespace bddmatch {

    // A bdd cut into two coupled halves. Exactly one auxiliary variable is 1 in
    // every accepted joint assignment; it names the node of the cut layer that
    // the original path crossed.
    struct split_result {
        bdd left;  // x_1..x_i, y_1..y_k
        bdd right; // y_1..y_k, x_{i+1}..x_n
        std::vector<var_id> aux_ids;
    };

    // Splits after the first `split_after_layer` layers. fresh_id(t) supplies the id of y_{t+1}.
    inline split_result split_bdd(const bdd& b, std::size_t split_after_layer, const std::function<var_id(std::size_t)>& fresh_id)
    {
        const std::size_t n = b.nr_layers();
        if(split_after_layer < 1 || split_after_layer >= n)
            throw split_at_terminal_layer("cannot split a bdd with " + std::to_string(n) + " layers after layer " + std::to_string(split_after_layer));
        const std::size_t i = split_after_layer;
        const std::size_t k = b.layer_width(i);
        assert(k > 0);

        const auto layers = b.local_layers();
        constexpr auto F = bdd::false_terminal;
        constexpr auto T = bdd::true_terminal;

        std::vector<var_id> aux(k);
        for(std::size_t t = 0; t < k; ++t)
            aux[t] = fresh_id(t);

        // Left: original prefix, then a one-hot chain. Aux layer j holds
        // "pending t" nodes for t >= j (index t - j) and, for j > 0, a "done" node (index k - j).
        std::vector<std::vector<bdd::node>> left(layers.begin(), layers.begin() + i);
        std::vector<var_id> left_vars(b.variables().begin(), b.variables().begin() + i);
        for(std::size_t j = 0; j < k; ++j) {
            const bool last = j + 1 == k;
            std::vector<bdd::node> layer;
            for(std::size_t t = j; t < k; ++t) {
                if(t == j)
                    layer.push_back({F, last ? T : static_cast<std::uint32_t>(k - (j + 1))});
                else
                    layer.push_back({static_cast<std::uint32_t>(t - (j + 1)), F});
            }
            if(j > 0)
                layer.push_back({last ? T : static_cast<std::uint32_t>(k - (j + 1)), F});
            left.push_back(std::move(layer));
            left_vars.push_back(aux[j]);
        }

        // Right: aux layer j holds "pending" (index 0) and "selected t" for t < j (index 1 + t),
        // the last aux layer hands over to node t of the original cut layer.
        std::vector<std::vector<bdd::node>> right;
        std::vector<var_id> right_vars;
        for(std::size_t j = 0; j < k; ++j) {
            const bool last = j + 1 == k;
            std::vector<bdd::node> layer;
            if(last)
                layer.push_back({F, static_cast<std::uint32_t>(j)});
            else
                layer.push_back({0, static_cast<std::uint32_t>(1 + j)});
            for(std::size_t t = 0; t < j; ++t)
                layer.push_back({static_cast<std::uint32_t>(last ? t : 1 + t), F});
            right.push_back(std::move(layer));
            right_vars.push_back(aux[j]);
        }
        right.insert(right.end(), layers.begin() + i, layers.end());
        right_vars.insert(right_vars.end(), b.variables().begin() + i, b.variables().end());

        return {bdd(std::move(left_vars), left), bdd(std::move(right_vars), right), std::move(aux)};
    }

    struct chunk_entry {
        std::size_t constraint;
        std::size_t nr_chunks;
    };

    using chunk_schedule = std::vector<chunk_entry>;

    // Constraints with more than chunk_size variables and how many pieces each becomes.
    inline chunk_schedule plan_chunks(const ilp_instance& instance, std::size_t chunk_size)
    {
        if(chunk_size < 2)
            throw error("chunk size must be at least 2");
        chunk_schedule schedule;
        for(std::size_t j = 0; j < instance.nr_constraints(); ++j) {
            const std::size_t n = instance.diagram(j).nr_layers();
            if(n > chunk_size)
                schedule.push_back({j, (n + chunk_size - 1) / chunk_size});
        }
        return schedule;
    }

    // Replaces every scheduled constraint by its chain of sub-bdds. Each piece
    // holds at most chunk_size original variables plus the auxiliary variables
    // coupling it to its neighbours; auxiliary variables get zero cost.
    inline ilp_instance apply_chunk_schedule(const ilp_instance& instance, const chunk_schedule& schedule, std::size_t chunk_size)
    {
        ilp_instance out = instance;
        std::uint32_t next_split = 1;
        std::vector<bdd> appended;
        for(const chunk_entry& e : schedule) {
            bdd current = instance.diagram(e.constraint);
            std::size_t prefix = 0;
            std::vector<bdd> pieces;
            while(current.nr_layers() - prefix > chunk_size) {
                const std::size_t cut = prefix + chunk_size;
                const var_id anchor = current.variable(cut - 1);
                const sweep_key anchor_key = out.key(anchor);
                if(anchor_key.split != 0)
                    throw error("split anchor must be an original variable");
                const std::uint32_t split_id = next_split++;
                auto fresh = [&](std::size_t t) {
                    return out.add_auxiliary_variable(0.0, {anchor_key.anchor, split_id, static_cast<std::uint32_t>(t)});
                };
                split_result r = split_bdd(current, cut, fresh);
                pieces.push_back(std::move(r.left));
                prefix = r.aux_ids.size();
                current = std::move(r.right);
            }
            pieces.push_back(std::move(current));
            out.replace_constraint(e.constraint, {std::move(pieces.front()), std::nullopt});
            for(std::size_t p = 1; p < pieces.size(); ++p)
                appended.push_back(std::move(pieces[p]));
        }
        for(bdd& b : appended)
            out.add_constraint(std::move(b));
        return out;
    }

    inline ilp_instance split_long_constraints(const ilp_instance& instance, std::size_t chunk_size)
    {
        return apply_chunk_schedule(instance, plan_chunks(instance, chunk_size), chunk_size);
    }

}
