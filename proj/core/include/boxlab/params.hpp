#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "boxlab/ad.hpp"
#include "boxlab/errors.hpp"

namespace boxlab {

// Ordered named parameter matrices. Iteration order is construction order,
// identical across structurally equal models, which keeps EMA, optimizer
// state and checkpoints aligned without any name lookups in hot loops.
struct ParamBlock {
    std::vector<std::pair<std::string, ad::Mat>> items;

    void add(std::string name, ad::Mat m) { items.emplace_back(std::move(name), std::move(m)); }

    ad::Mat& at(std::string_view name) {
        for (auto& [n, m] : items)
            if (n == name) return m;
        throw ValidationError("params: unknown parameter '" + std::string(name) + "'");
    }
    const ad::Mat& at(std::string_view name) const {
        return const_cast<ParamBlock*>(this)->at(name);
    }

    template <class F>
    void visit(F&& f) {
        for (auto& [n, m] : items) f(n, m);
    }
    template <class F>
    void visit(F&& f) const {
        for (const auto& [n, m] : items) f(n, m);
    }

    std::size_t scalar_count() const {
        std::size_t c = 0;
        for (const auto& [n, m] : items) c += static_cast<std::size_t>(m.size());
        return c;
    }
};

} // namespace boxlab
