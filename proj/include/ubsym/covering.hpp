#ifndef UBSYM_COVERING_HPP
#define UBSYM_COVERING_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

namespace ubsym {

/// Greedy covering-array construction: rows over the given per-dimension
/// level sets such that every combination of levels across any `strength`
/// dimensions appears in at least one row.
inline std::vector<std::vector<long>> covering_array(
    const std::vector<std::vector<long>>& levels, int strength = 2,
    std::uint64_t seed = 0)
{
    std::size_t d = levels.size();
    std::vector<std::vector<long>> rows;
    if (d == 0) return rows;
    for (const auto& l : levels)
        if (l.empty()) return rows;
    if (strength > static_cast<int>(d)) strength = static_cast<int>(d);

    // enumerate dimension tuples of the requested strength
    std::vector<std::vector<std::size_t>> dimTuples;
    std::vector<std::size_t> cur;
    std::function<void(std::size_t)> pick = [&](std::size_t from) {
        if (static_cast<int>(cur.size()) == strength) {
            dimTuples.push_back(cur);
            return;
        }
        for (std::size_t i = from; i < d; ++i) {
            cur.push_back(i);
            pick(i + 1);
            cur.pop_back();
        }
    };
    pick(0);

    // uncovered tuples: (tuple index, level indices encoded positionally)
    auto encode = [&](std::size_t ti, const std::vector<std::size_t>& lv) {
        std::size_t code = ti;
        for (std::size_t k = 0; k < lv.size(); ++k)
            code = code * 64 + lv[k];
        return code;
    };
    std::set<std::size_t> uncovered;
    for (std::size_t ti = 0; ti < dimTuples.size(); ++ti) {
        std::vector<std::size_t> lv(static_cast<std::size_t>(strength), 0);
        bool more = true;
        while (more) {
            uncovered.insert(encode(ti, lv));
            more = false;
            for (std::size_t k = lv.size(); k-- > 0;) {
                if (++lv[k] < levels[dimTuples[ti][k]].size()) {
                    more = true;
                    break;
                }
                lv[k] = 0;
            }
        }
    }

    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    auto tuples_covered = [&](const std::vector<std::size_t>& rowLv) {
        std::size_t n = 0;
        for (std::size_t ti = 0; ti < dimTuples.size(); ++ti) {
            std::vector<std::size_t> lv;
            for (std::size_t dim : dimTuples[ti]) lv.push_back(rowLv[dim]);
            if (uncovered.count(encode(ti, lv))) ++n;
        }
        return n;
    };

    while (!uncovered.empty()) {
        std::vector<std::size_t> best;
        std::size_t bestScore = 0;
        for (int cand = 0; cand < 24; ++cand) {
            std::vector<std::size_t> rowLv(d);
            std::vector<std::size_t> order(d);
            for (std::size_t i = 0; i < d; ++i) order[i] = i;
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t i = 0; i < d; ++i)
                rowLv[i] = rng() % levels[i].size();
            // greedily reassign each dimension to the level covering most
            for (std::size_t dim : order) {
                std::size_t bestLv = rowLv[dim];
                std::size_t bestN = 0;
                for (std::size_t lv = 0; lv < levels[dim].size(); ++lv) {
                    rowLv[dim] = lv;
                    std::size_t n = tuples_covered(rowLv);
                    if (n > bestN) {
                        bestN = n;
                        bestLv = lv;
                    }
                }
                rowLv[dim] = bestLv;
            }
            std::size_t score = tuples_covered(rowLv);
            if (score > bestScore || best.empty()) {
                bestScore = score;
                best = rowLv;
            }
        }
        // mark covered
        for (std::size_t ti = 0; ti < dimTuples.size(); ++ti) {
            std::vector<std::size_t> lv;
            for (std::size_t dim : dimTuples[ti]) lv.push_back(best[dim]);
            uncovered.erase(encode(ti, lv));
        }
        std::vector<long> row(d);
        for (std::size_t i = 0; i < d; ++i) row[i] = levels[i][best[i]];
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace ubsym

#endif
