#pragma once

#include <algorithm>
#include <cstring>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "problem.hpp"

namespace btrack {

// A belief or constraint relation: an ordered scope of variables plus a set
// of tuples over it. Scope is kept sorted in canonical variable order and
// rows are kept sorted and deduplicated, so set equality is plain ==.
struct Relation {
    std::vector<int> scope; // sorted var indices
    size_t nrows = 0;
    std::vector<uint16_t> data; // row-major, width = scope.size()

    size_t width() const { return scope.size(); }
    size_t size() const { return nrows; }
    bool empty() const { return nrows == 0; }

    const uint16_t* row(size_t i) const { return data.data() + i * width(); }
    uint16_t* row(size_t i) { return data.data() + i * width(); }

    int col_of(int var) const {
        auto it = std::lower_bound(scope.begin(), scope.end(), var);
        if (it == scope.end() || *it != var) return -1;
        return int(it - scope.begin());
    }

    bool operator==(const Relation& o) const { return scope == o.scope && nrows == o.nrows && data == o.data; }
    bool operator!=(const Relation& o) const { return !(*this == o); }

    void canonicalize() {
        const size_t w = width();
        if (w == 0) {
            nrows = std::min<size_t>(nrows, 1);
            data.clear();
            return;
        }
        // already strictly sorted (the common case after order-preserving ops)
        bool sorted = true;
        for (size_t i = 1; i < nrows && sorted; ++i)
            sorted = std::lexicographical_compare(row(i - 1), row(i - 1) + w, row(i), row(i) + w);
        if (sorted) return;
        std::vector<size_t> idx(nrows);
        std::iota(idx.begin(), idx.end(), size_t(0));
        const uint16_t* base = data.data();
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            return std::lexicographical_compare(base + a * w, base + (a + 1) * w, base + b * w, base + (b + 1) * w);
        });
        std::vector<uint16_t> out;
        out.reserve(data.size());
        size_t kept = 0;
        for (size_t k = 0; k < idx.size(); ++k) {
            const uint16_t* r = base + idx[k] * w;
            if (kept > 0 && std::memcmp(out.data() + (kept - 1) * w, r, w * sizeof(uint16_t)) == 0) continue;
            out.insert(out.end(), r, r + w);
            ++kept;
        }
        data = std::move(out);
        nrows = kept;
    }

    void push_row(const uint16_t* r) {
        if (width() > 0) data.insert(data.end(), r, r + width());
        ++nrows;
    }

    // Distinct restriction of the rows to S (S must be a subset of scope).
    // Deduplicates through a hash pass so wide inputs with few distinct
    // restrictions stay cheap.
    Relation project(const std::vector<int>& s) const {
        std::vector<int> cols;
        cols.reserve(s.size());
        for (int v : s) {
            int c = col_of(v);
            if (c < 0) fail(Errc::invalid_scope, "projection scope not contained in relation scope");
            cols.push_back(c);
        }
        Relation out;
        out.scope = s;
        std::sort(out.scope.begin(), out.scope.end());
        // remap columns to the sorted order of s
        std::vector<int> order(s.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return s[size_t(a)] < s[size_t(b)]; });
        std::vector<int> pick(s.size());
        for (size_t j = 0; j < s.size(); ++j) pick[j] = cols[size_t(order[j])];

        const size_t w = s.size();
        std::vector<std::pair<uint64_t, uint32_t>> hashes(nrows);
        for (size_t i = 0; i < nrows; ++i) {
            const uint16_t* r = row(i);
            uint64_t h = 1469598103934665603ULL;
            for (size_t j = 0; j < w; ++j) {
                h ^= r[pick[j]];
                h *= 1099511628211ULL;
            }
            hashes[i] = {h, uint32_t(i)};
        }
        std::sort(hashes.begin(), hashes.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<uint16_t> tmp(w);
        for (size_t i = 0; i < nrows;) {
            size_t j = i;
            while (j < nrows && hashes[j].first == hashes[i].first) ++j;
            // group shares a hash; emit distinct restrictions within it
            for (size_t k = i; k < j; ++k) {
                const uint16_t* r = row(hashes[k].second);
                for (size_t c = 0; c < w; ++c) tmp[c] = r[pick[c]];
                bool dup = false;
                for (size_t k2 = i; k2 < k && !dup; ++k2) {
                    const uint16_t* r2 = row(hashes[k2].second);
                    dup = true;
                    for (size_t c = 0; c < w; ++c)
                        if (tmp[c] != r2[pick[c]]) {
                            dup = false;
                            break;
                        }
                }
                if (!dup) out.push_row(tmp.data());
            }
            i = j;
        }
        out.canonicalize();
        return out;
    }

    template <typename Pred>
    Relation filter(Pred keep) const {
        Relation out;
        out.scope = scope;
        if (width() == 0) {
            out.nrows = (nrows > 0 && keep(static_cast<const uint16_t*>(nullptr))) ? 1 : 0;
            return out;
        }
        for (size_t i = 0; i < nrows; ++i)
            if (keep(row(i))) out.push_row(row(i));
        return out; // row order preserved; already canonical
    }

    static uint64_t hash_cols(const uint16_t* r, const std::vector<int>& cols) {
        uint64_t h = 1469598103934665603ULL;
        for (int c : cols) {
            h ^= r[c];
            h *= 1099511628211ULL;
        }
        return h;
    }

    // flat hash index: (hash, row) pairs sorted by hash
    struct RowIndex {
        std::vector<std::pair<uint64_t, uint32_t>> buckets;

        void build(const Relation& r, const std::vector<int>& cols) {
            buckets.resize(r.nrows);
            for (size_t j = 0; j < r.nrows; ++j) buckets[j] = {hash_cols(r.row(j), cols), uint32_t(j)};
            std::sort(buckets.begin(), buckets.end());
        }
        std::pair<size_t, size_t> range(uint64_t h) const {
            auto lo = std::lower_bound(buckets.begin(), buckets.end(), std::make_pair(h, uint32_t(0)));
            auto hi = lo;
            while (hi != buckets.end() && hi->first == h) ++hi;
            return {size_t(lo - buckets.begin()), size_t(hi - buckets.begin())};
        }
    };

    // Natural join: all combinations agreeing on shared variables. Disjoint
    // scopes produce the cross product. Join output carries no duplicates, so
    // sorting into canonical row order is optional.
    static Relation join(const Relation& a, const Relation& b, size_t max_rows = 0, bool sort_output = true) {
        std::vector<int> shared;
        std::set_intersection(a.scope.begin(), a.scope.end(), b.scope.begin(), b.scope.end(),
                              std::back_inserter(shared));
        std::vector<int> acols, bcols;
        for (int v : shared) {
            acols.push_back(a.col_of(v));
            bcols.push_back(b.col_of(v));
        }
        Relation out;
        std::set_union(a.scope.begin(), a.scope.end(), b.scope.begin(), b.scope.end(),
                       std::back_inserter(out.scope));
        // output column sources: from a, or from b (for b-only vars)
        std::vector<std::pair<bool, int>> src; // (from_a, col)
        for (int v : out.scope) {
            int ca = a.col_of(v);
            if (ca >= 0)
                src.emplace_back(true, ca);
            else
                src.emplace_back(false, b.col_of(v));
        }
        RowIndex index;
        index.build(b, bcols);
        std::vector<uint16_t> tmp(out.scope.size());
        for (size_t i = 0; i < a.nrows; ++i) {
            const uint16_t* ra = a.row(i);
            auto [lo, hi] = index.range(hash_cols(ra, acols));
            for (size_t k = lo; k < hi; ++k) {
                const uint16_t* rb = b.row(index.buckets[k].second);
                bool match = true;
                for (size_t c = 0; c < shared.size(); ++c)
                    if (ra[acols[c]] != rb[bcols[c]]) {
                        match = false;
                        break;
                    }
                if (!match) continue;
                for (size_t c = 0; c < src.size(); ++c) tmp[c] = src[c].first ? ra[src[c].second] : rb[src[c].second];
                out.push_row(tmp.data());
                if (max_rows && out.nrows > max_rows)
                    fail(Errc::capacity_exceeded, "join exceeds " + std::to_string(max_rows) + " rows");
            }
        }
        if (sort_output) out.canonicalize();
        return out;
    }

    // Rows of a that agree with at least one row of b on the shared variables.
    static Relation semijoin(const Relation& a, const Relation& b) {
        std::vector<int> shared;
        std::set_intersection(a.scope.begin(), a.scope.end(), b.scope.begin(), b.scope.end(),
                              std::back_inserter(shared));
        if (shared.empty()) {
            if (b.nrows > 0) return a;
            Relation out;
            out.scope = a.scope;
            return out;
        }
        std::vector<int> acols, bcols;
        for (int v : shared) {
            acols.push_back(a.col_of(v));
            bcols.push_back(b.col_of(v));
        }
        RowIndex index;
        index.build(b, bcols);
        return a.filter([&](const uint16_t* ra) {
            auto [lo, hi] = index.range(hash_cols(ra, acols));
            for (size_t k = lo; k < hi; ++k) {
                const uint16_t* rb = b.row(index.buckets[k].second);
                bool match = true;
                for (size_t c = 0; c < shared.size(); ++c)
                    if (ra[acols[c]] != rb[bcols[c]]) {
                        match = false;
                        break;
                    }
                if (match) return true;
            }
            return false;
        });
    }

    bool subset_of(const Relation& o) const {
        if (scope != o.scope) return false;
        if (nrows > o.nrows) return false;
        const size_t w = width();
        if (w == 0) return nrows <= o.nrows;
        // both canonical: merge walk
        size_t j = 0;
        for (size_t i = 0; i < nrows; ++i) {
            const uint16_t* r = row(i);
            while (j < o.nrows &&
                   std::lexicographical_compare(o.row(j), o.row(j) + w, r, r + w))
                ++j;
            if (j >= o.nrows || std::memcmp(o.row(j), r, w * sizeof(uint16_t)) != 0) return false;
        }
        return true;
    }

    // All tuples over `scope` (cross product of domains), optionally seeded
    // with fixed values from `pin` (var -> value).
    static Relation full(const Problem& p, std::vector<int> sc, const std::map<int, int>& pin = {},
                         size_t max_rows = 0) {
        std::sort(sc.begin(), sc.end());
        Relation out;
        out.scope = sc;
        const size_t w = sc.size();
        if (w == 0) {
            out.nrows = 1;
            return out;
        }
        std::vector<std::vector<uint16_t>> choices(w);
        size_t total = 1;
        for (size_t c = 0; c < w; ++c) {
            auto it = pin.find(sc[c]);
            if (it != pin.end())
                choices[c] = {uint16_t(it->second)};
            else
                for (size_t v = 0; v < p.domain_size(sc[c]); ++v) choices[c].push_back(uint16_t(v));
            total *= choices[c].size();
            if (max_rows && total > max_rows)
                fail(Errc::capacity_exceeded, "enumeration exceeds " + std::to_string(max_rows) + " rows");
        }
        std::vector<size_t> odo(w, 0);
        std::vector<uint16_t> tmp(w);
        for (size_t n = 0; n < total; ++n) {
            for (size_t c = 0; c < w; ++c) tmp[c] = choices[c][odo[c]];
            out.push_row(tmp.data());
            for (size_t c = w; c-- > 0;) {
                if (++odo[c] < choices[c].size()) break;
                odo[c] = 0;
            }
        }
        out.canonicalize();
        return out;
    }

    // One tuple per line, var=value pairs in canonical order.
    void dump(const Problem& p, std::ostream& os) const {
        for (size_t i = 0; i < nrows; ++i) {
            const uint16_t* r = row(i);
            for (size_t c = 0; c < width(); ++c) {
                if (c) os << ' ';
                os << p.vars[size_t(scope[c])].name << '=' << p.vars[size_t(scope[c])].domain[r[c]];
            }
            os << '\n';
        }
    }

    uint64_t fingerprint() const {
        uint64_t h = 1469598103934665603ULL;
        auto mix = [&](uint64_t x) {
            h ^= x;
            h *= 1099511628211ULL;
        };
        for (int v : scope) mix(uint64_t(v) + 0x9e37);
        mix(nrows);
        for (uint16_t v : data) mix(v);
        return h;
    }
};

// Compiles a formula to the relation over `sc` whose rows are exactly the
// valuations extendable to a model of the formula (logical projection).
// Formula variables outside `sc` are handled by existential enumeration.
inline Relation compile_formula(const Problem& p, const Formula& f, std::vector<int> sc, size_t max_rows = 1u << 22) {
    std::sort(sc.begin(), sc.end());
    std::vector<int> fvars = f.scope();
    std::vector<int> extra;
    std::set_difference(fvars.begin(), fvars.end(), sc.begin(), sc.end(), std::back_inserter(extra));

    // fast path: a bare count-true formula fully inside sc, no extra vars
    if (f.kind == Formula::Kind::CountTrue && extra.empty()) {
        std::vector<int> cvars = f.vars;
        std::sort(cvars.begin(), cvars.end());
        if (cvars == sc && f.count >= 0 && size_t(f.count) <= sc.size()) {
            Relation out;
            out.scope = sc;
            std::vector<uint16_t> tmp(sc.size(), 0);
            // enumerate combinations of `count` positions set to 1
            std::vector<size_t> comb(size_t(f.count));
            std::iota(comb.begin(), comb.end(), size_t(0));
            bool done = f.count == 0;
            if (done) out.push_row(tmp.data());
            while (!done) {
                std::fill(tmp.begin(), tmp.end(), uint16_t(0));
                for (size_t pos : comb) tmp[pos] = 1;
                out.push_row(tmp.data());
                // next combination
                size_t k = comb.size();
                size_t i = k;
                while (i-- > 0) {
                    if (comb[i] + (k - i) < sc.size()) {
                        ++comb[i];
                        for (size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
                        break;
                    }
                    if (i == 0) done = true;
                }
                if (max_rows && out.nrows > max_rows) fail(Errc::capacity_exceeded, "count relation too large");
            }
            out.canonicalize();
            return out;
        }
    }

    Relation base = Relation::full(p, sc, {}, max_rows);
    std::vector<int> assign(p.vars.size(), -1);
    std::vector<int> cols(sc.size());
    for (size_t c = 0; c < sc.size(); ++c) cols[c] = int(c);

    size_t extra_total = 1;
    for (int v : extra) {
        extra_total *= p.domain_size(v);
        if (extra_total > (1u << 20)) fail(Errc::capacity_exceeded, "existential enumeration too large");
    }

    return base.filter([&](const uint16_t* r) {
        for (size_t c = 0; c < sc.size(); ++c) assign[size_t(sc[c])] = r[c];
        if (extra.empty()) {
            bool ok = eval_formula(f, assign);
            for (int v : sc) assign[size_t(v)] = -1;
            return ok;
        }
        // exists-check over extra vars
        std::vector<size_t> odo(extra.size(), 0);
        bool ok = false;
        for (size_t n = 0; n < extra_total && !ok; ++n) {
            for (size_t c = 0; c < extra.size(); ++c) assign[size_t(extra[c])] = int(odo[c]);
            ok = eval_formula(f, assign);
            for (size_t c = extra.size(); c-- > 0;) {
                if (++odo[c] < p.domain_size(extra[c])) break;
                odo[c] = 0;
            }
        }
        for (int v : extra) assign[size_t(v)] = -1;
        for (int v : sc) assign[size_t(v)] = -1;
        return ok;
    });
}

} // namespace btrack
