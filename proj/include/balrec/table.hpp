#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace balrec {

enum class TableRole {
    biased,              // MNAR observed ratings (B)
    uniform_balance,     // slice of the MAR data used for balancing (U)
    uniform_validation,  // slice used for model selection / early stopping
    uniform_test,        // slice used for final metrics
    full_truth,          // every pair with its true rating (synthetic only)
};

struct Interaction {
    int user = 0;
    int item = 0;
    double rating = 0.0;
};

// Immutable after construction; safe to share across threads.
struct InteractionTable {
    int num_users = 0;
    int num_items = 0;
    std::vector<Interaction> records;
    TableRole role = TableRole::biased;

    // Checks index ranges and rejects duplicate (user, item) pairs.
    void validate() const;
};

enum class TableFormat { tsv_triples, coat_matrix };

// tsv_triples: one-line header "#users=M items=N", then user<TAB>item<TAB>rating.
// coat_matrix: dense whitespace-separated integer matrix, 0 = missing.
InteractionTable load_interactions(const std::string& path, TableFormat format,
                                   TableRole role = TableRole::biased);

// Writes the canonical TSV triples format; load(save(x)) round-trips bit-exactly.
void save_interactions(const InteractionTable& table, const std::string& path);

// rating -> 1 if rating >= threshold else 0; record count unchanged.
InteractionTable binarize(const InteractionTable& table, double threshold);

struct SplitFractions {
    double balance = 0.05;
    double validation = 0.05;
    double test = 0.90;
};

struct SplitBundle {
    InteractionTable biased;
    InteractionTable balance;
    InteractionTable validation;
    InteractionTable test;
    std::uint64_t seed = 0;
};

// Deterministic partition of the uniform table: floor-based sizes for balance
// and validation, remainder to test. The biased member is left empty; callers
// attach their training table.
SplitBundle split_uniform(const InteractionTable& uniform, SplitFractions fractions,
                          std::uint64_t seed);

}  // namespace balrec
