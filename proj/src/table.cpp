#include "balrec/table.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "balrec/errors.hpp"
#include "balrec/seeds.hpp"

namespace balrec {

void InteractionTable::validate() const {
    if (num_users < 0 || num_items < 0)
        throw ContractError("table: negative dimensions");
    std::unordered_set<std::int64_t> seen;
    seen.reserve(records.size() * 2);
    for (const auto& r : records) {
        if (r.user < 0 || r.user >= num_users || r.item < 0 || r.item >= num_items)
            throw ContractError("table: index out of range: user=" + std::to_string(r.user) +
                                " item=" + std::to_string(r.item));
        std::int64_t key = static_cast<std::int64_t>(r.user) * num_items + r.item;
        if (!seen.insert(key).second)
            throw ContractError("table: duplicate pair: user=" + std::to_string(r.user) +
                                " item=" + std::to_string(r.item));
    }
}

namespace {

InteractionTable load_tsv(std::ifstream& in, const std::string& path) {
    InteractionTable table;
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path + ":1: empty file, expected header '#users=M items=N'");
    int m = 0, n = 0;
    if (std::sscanf(line.c_str(), "#users=%d items=%d", &m, &n) != 2)
        throw ParseError(path + ":1: bad header '" + line + "'");
    table.num_users = m;
    table.num_items = n;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        int u, i;
        double r;
        if (std::sscanf(line.c_str(), "%d\t%d\t%lf", &u, &i, &r) != 3)
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed triple '" +
                             line + "'");
        table.records.push_back({u, i, r});
    }
    return table;
}

InteractionTable load_coat(std::ifstream& in, const std::string& path) {
    InteractionTable table;
    std::string line;
    int lineno = 0;
    int cols = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream row(line);
        int value, col = 0;
        while (row >> value) {
            if (value != 0)
                table.records.push_back({table.num_users, col, static_cast<double>(value)});
            ++col;
        }
        if (!row.eof())
            throw ParseError(path + ":" + std::to_string(lineno) + ": non-integer token");
        if (cols < 0)
            cols = col;
        else if (col != cols)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(cols) + " columns, got " + std::to_string(col));
        ++table.num_users;
    }
    table.num_items = std::max(cols, 0);
    return table;
}

}  // namespace

InteractionTable load_interactions(const std::string& path, TableFormat format,
                                   TableRole role) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file: " + path);
    InteractionTable table =
        format == TableFormat::tsv_triples ? load_tsv(in, path) : load_coat(in, path);
    table.role = role;
    table.validate();
    return table;
}

void save_interactions(const InteractionTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << "#users=" << table.num_users << " items=" << table.num_items << "\n";
    char buf[64];
    for (const auto& r : table.records) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.rating);
        out << r.user << '\t' << r.item << '\t' << buf << '\n';
    }
}

InteractionTable binarize(const InteractionTable& table, double threshold) {
    InteractionTable out = table;
    for (auto& r : out.records) r.rating = r.rating >= threshold ? 1.0 : 0.0;
    return out;
}

SplitBundle split_uniform(const InteractionTable& uniform, SplitFractions f,
                          std::uint64_t seed) {
    if (f.balance <= 0 || f.validation <= 0 || f.test <= 0)
        throw ContractError("split: fractions must be positive");
    if (std::abs(f.balance + f.validation + f.test - 1.0) > 1e-9)
        throw ContractError("split: fractions must sum to 1");
    const std::size_t n = uniform.records.size();
    const auto n_bal = static_cast<std::size_t>(std::floor(f.balance * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::floor(f.validation * static_cast<double>(n)));
    if (n_bal < 1 || n_val < 1 || n_bal + n_val + 1 > n)
        throw ContractError("split: uniform table too small for requested fractions");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(seed, "split.uniform");
    std::shuffle(order.begin(), order.end(), rng);

    SplitBundle bundle;
    bundle.seed = seed;
    auto part = [&](std::size_t begin, std::size_t end, TableRole role) {
        InteractionTable t;
        t.num_users = uniform.num_users;
        t.num_items = uniform.num_items;
        t.role = role;
        t.records.reserve(end - begin);
        for (std::size_t k = begin; k < end; ++k) t.records.push_back(uniform.records[order[k]]);
        return t;
    };
    bundle.balance = part(0, n_bal, TableRole::uniform_balance);
    bundle.validation = part(n_bal, n_bal + n_val, TableRole::uniform_validation);
    bundle.test = part(n_bal + n_val, n, TableRole::uniform_test);
    bundle.biased.num_users = uniform.num_users;
    bundle.biased.num_items = uniform.num_items;
    return bundle;
}

}  // namespace balrec
