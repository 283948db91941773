#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "authfeed/hash.hpp"

namespace authfeed::bench {

enum class CostKind { membership, consistency, parse, query, response };

std::string_view to_string(CostKind kind);

/// One measured operation, taken from a ledger receipt.
struct CostSample {
    std::size_t n = 0; ///< log size
    CostKind kind = CostKind::membership;
    int trial = 0;
    std::size_t index = 0; ///< entry verified (membership, parse); 0 otherwise
    std::uint64_t hash_ops = 0;
    std::uint64_t proof_length = 0;
    std::uint64_t parse_tokens = 0;
    std::uint64_t payload_bytes = 0;
    std::uint64_t trace_bytes = 0; ///< length of the transaction's trace line
};

/// Least squares y = a + b x.
struct LinearFit {
    double a = 0;
    double b = 0;
    double r2 = 0;
    std::size_t points = 0;
};

/// Throws std::invalid_argument with fewer than two points or a constant x.
/// With constant y the fit is exact and r2 is 1.
LinearFit fit_linear(std::span<const double> x, std::span<const double> y);
nlohmann::json to_json(const LinearFit &fit);

/// Old size the suite commits before updating to n: n/2 + 1 for n >= 4 and 1
/// for n = 2. An old size of exactly n/2 would give a constant two-element
/// proof at every n.
std::size_t consistency_old_size(std::size_t n);

struct SuiteOptions {
    std::vector<std::size_t> sizes = {2, 32, 1024, 32768, 1048576};
    int trials = 3;
    std::uint64_t seed = 1;
    /// Verify this entry in every trial instead of a random one.
    std::optional<std::size_t> entry_index;
    HashAlgorithm hash = HashAlgorithm::keccak256;
};

struct SuiteResult {
    std::vector<CostSample> samples;
    /// Mean hash ops per size against log2 n. Membership cost depends on the
    /// leaf (every LEFT sibling costs a second hash in the dual-root fold),
    /// so per-size means are fitted; the *_samples fits use every sample.
    LinearFit membership;
    LinearFit consistency;
    LinearFit membership_samples;
    bool parse_constant = false;
    std::vector<std::string> warnings;
};

/// For each size: builds an n-entry log, commits the old size, updates to n
/// (one consistency sample), then per trial verifies a random entry through
/// the authoritative contract (membership sample) and submits it to a
/// relying contract (parse sample). Sizes must be powers of two in
/// [2, 2^20]. A size that runs out of memory is skipped with a warning.
SuiteResult run_suite(const SuiteOptions &options);

struct SweepResult {
    std::vector<CostSample> samples;
    LinearFit query;    ///< trace bytes against payload bytes
    LinearFit response;
    double max_relative_gap = 0; ///< max |response - query| / query at equal size
};

/// Sends one query and one response per payload size and records the trace
/// line length of each.
SweepResult censorship_size_sweep(const std::vector<std::size_t> &payload_sizes = {50, 150, 500, 1024, 2048, 5120});

/// CSV with header n,kind,trial,index,hash_ops,proof_length,parse_tokens,payload_bytes,trace_bytes.
std::string to_csv(std::span<const CostSample> samples);

/// Membership "Hash calculation" gas from the reference cost table at
/// log2 n = 1, 5, 10, 15, 20, and the gas of one hash in that table (the
/// consistency row's entry for n = 2; the membership row there is three of
/// them).
inline constexpr double kTableLog2Sizes[] = {1, 5, 10, 15, 20};
inline constexpr double kTableMembershipHashGas[] = {447, 1107, 1933, 2757, 3583};
inline constexpr double kTableConsistencyHashGas[] = {149, 809, 1634, 2294, 3284};
inline constexpr double kTableGasPerHash = 149;

/// Membership slope from the table in hashes per doubling.
double table_membership_slope();

nlohmann::json fit_report(const SuiteResult &suite);
nlohmann::json sweep_report(const SweepResult &sweep);

} // namespace authfeed::bench
