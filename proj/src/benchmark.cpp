#include "authfeed/benchmark.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "authfeed/authoritative_contract.hpp"
#include "authfeed/ledger_client.hpp"
#include "authfeed/merkle_log.hpp"
#include "authfeed/relying_contract.hpp"

namespace authfeed::bench {

namespace {

constexpr std::uint64_t kFunds = 1'000'000'000;
constexpr std::uint64_t kDeposit = 100;
constexpr std::size_t kMaxSize = std::size_t{1} << 20;

// Same shape as a feed entry, so parse cost matches the real one. The id
// never equals the bet's match id: every trial is verified and ignored, which
// keeps the bet open for the next trial.
std::string trial_entry(std::size_t index) {
    return R"({"id":")" + std::to_string(900000 + index % 100000) +
           R"(","date":"2018-07-15T18:00:00Z","local":"France","visitor":"Croatia","localGoals":4,"visitorGoals":2})";
}

std::string filler_entry(std::size_t index) {
    return R"({"seq":)" + std::to_string(index) + "}";
}

struct Chain {
    KeyPair provider = KeyPair::from_seed_text("bench-provider");
    KeyPair alice = KeyPair::from_seed_text("bench-alice");
    KeyPair bob = KeyPair::from_seed_text("bench-bob");
    Ledger ledger{{{provider.address(), kFunds}, {alice.address(), kFunds}, {bob.address(), kFunds}},
                  standard_registry()};
    LocalLedgerClient client{ledger};
    Wallet p{provider, client};
    Wallet a{alice, client};
    Wallet b{bob, client};
    AuthoritativeConfig config;
    Address cc;

    explicit Chain(HashAlgorithm hash) {
        config.hash = hash;
        cc = p.deploy(AuthoritativeContract::kCodeId, AuthoritativeContract::encode_init(config));
    }

    std::uint64_t trace_bytes(const Receipt &r) const {
        return r.position ? ledger.trace(*r.position).front().to_jsonl().size() : 0;
    }
};

void require_ok(const Receipt &r, const std::string &what) {
    if (!r.ok()) {
        throw std::runtime_error{what + " failed: " + r.error};
    }
}

void measure_size(std::size_t n, const SuiteOptions &options, std::mt19937_64 &rng, std::vector<CostSample> &out) {
    if (options.entry_index && *options.entry_index >= n) {
        throw std::invalid_argument{"entry index outside a log of size " + std::to_string(n)};
    }
    std::set<std::size_t> trial_indices;
    std::vector<std::size_t> picks;
    for (int t = 0; t < options.trials; ++t) {
        picks.push_back(options.entry_index ? *options.entry_index : rng() % n);
        trial_indices.insert(picks.back());
    }

    MerkleLog log{Hasher{options.hash}};
    for (std::size_t i = 0; i < n; ++i) {
        log.append(trial_indices.count(i) ? trial_entry(i) : filler_entry(i));
    }

    Chain chain{options.hash};
    auto m = consistency_old_size(n);
    require_ok(chain.p.send(chain.cc, "update", authoritative_args::update(log.root_at(m), {})), "initial update");
    auto proof_cons = log.consistency_proof(m, n);
    auto update = chain.p.send(chain.cc, "update", authoritative_args::update(log.root(), proof_cons));
    require_ok(update, "update to " + std::to_string(n));
    out.push_back({n, CostKind::consistency, 0, 0, update.hash_ops, proof_cons.size(), 0, 0, chain.trace_bytes(update)});

    BetTerms terms{chain.cc, "341576", chain.bob.address(), kDeposit, Prediction::local, Prediction::visitor};
    auto bet = chain.a.deploy(RelyingContract::kCodeId, terms.encode(), kDeposit);
    require_ok(chain.b.send(bet, "join", {}, kDeposit), "join");

    for (int t = 0; t < options.trials; ++t) {
        auto index = picks[static_cast<std::size_t>(t)];
        const auto &entry = log.entry(index);
        auto proof = log.membership_proof(index);

        auto mem = chain.a.send(chain.cc, "membership", authoritative_args::membership(entry, proof),
                                chain.config.fee_membership);
        require_ok(mem, "membership");
        if (!decode_bool(mem.return_value)) {
            throw std::runtime_error{"membership of entry " + std::to_string(index) + " returned false"};
        }
        out.push_back({n, CostKind::membership, t, index, mem.hash_ops, proof.size(), 0, entry.size(), chain.trace_bytes(mem)});

        auto submit = chain.a.send(bet, "submit_data", relying_args::submit_data(entry, proof),
                                   chain.config.fee_membership);
        require_ok(submit, "submit_data");
        if (decode_result(submit.return_value) != "ignored") {
            throw std::runtime_error{"unexpected relying result " + decode_result(submit.return_value)};
        }
        out.push_back(
            {n, CostKind::parse, t, index, submit.hash_ops, proof.size(), submit.parse_tokens, entry.size(), chain.trace_bytes(submit)});
    }
}

LinearFit fit_points(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() < 2 || std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) {
        return {0, 0, 0, x.size()};
    }
    return fit_linear(x, y);
}

LinearFit fit_kind(const std::vector<CostSample> &samples, CostKind kind, bool means) {
    std::map<std::size_t, std::vector<double>> ops;
    for (const auto &s : samples) {
        if (s.kind == kind) {
            ops[s.n].push_back(static_cast<double>(s.hash_ops));
        }
    }
    std::vector<double> x;
    std::vector<double> y;
    for (const auto &[n, values] : ops) {
        auto log2n = std::log2(static_cast<double>(n));
        if (means) {
            x.push_back(log2n);
            y.push_back(std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size()));
        } else {
            for (auto v : values) {
                x.push_back(log2n);
                y.push_back(v);
            }
        }
    }
    return fit_points(x, y);
}

} // namespace

std::string_view to_string(CostKind kind) {
    switch (kind) {
    case CostKind::membership:
        return "membership";
    case CostKind::consistency:
        return "consistency";
    case CostKind::parse:
        return "parse";
    case CostKind::query:
        return "query";
    case CostKind::response:
        return "response";
    }
    return "?";
}

LinearFit fit_linear(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument{"fit_linear needs at least two (x, y) pairs"};
    }
    double n = static_cast<double>(x.size());
    double mx = 0;
    double my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0;
    double sxy = 0;
    double syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0) {
        throw std::invalid_argument{"fit_linear needs at least two distinct x values"};
    }
    LinearFit fit;
    fit.b = sxy / sxx;
    fit.a = my - fit.b * mx;
    fit.points = x.size();
    if (syy == 0) {
        fit.r2 = 1;
    } else {
        double ss_res = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double e = y[i] - (fit.a + fit.b * x[i]);
            ss_res += e * e;
        }
        fit.r2 = 1 - ss_res / syy;
    }
    return fit;
}

nlohmann::json to_json(const LinearFit &fit) {
    return {{"a", fit.a}, {"b", fit.b}, {"r2", fit.r2}, {"points", fit.points}};
}

std::size_t consistency_old_size(std::size_t n) {
    if (n < 2) {
        throw std::invalid_argument{"log size must be at least 2"};
    }
    return n < 4 ? 1 : n / 2 + 1;
}

SuiteResult run_suite(const SuiteOptions &options) {
    if (options.trials < 1) {
        throw std::invalid_argument{"trials must be positive"};
    }
    for (auto n : options.sizes) {
        if (n < 2 || n > kMaxSize || !std::has_single_bit(n)) {
            throw std::invalid_argument{"sizes must be powers of two in [2, 2^20], got " + std::to_string(n)};
        }
    }
    SuiteResult result;
    std::mt19937_64 rng{options.seed};
    for (auto n : options.sizes) {
        try {
            measure_size(n, options, rng, result.samples);
        } catch (const std::bad_alloc &) {
            result.warnings.push_back("out of memory at n = " + std::to_string(n) + "; size skipped");
        }
    }
    result.membership = fit_kind(result.samples, CostKind::membership, true);
    result.consistency = fit_kind(result.samples, CostKind::consistency, true);
    result.membership_samples = fit_kind(result.samples, CostKind::membership, false);
    std::set<std::uint64_t> tokens;
    for (const auto &s : result.samples) {
        if (s.kind == CostKind::parse) {
            tokens.insert(s.parse_tokens);
        }
    }
    result.parse_constant = tokens.size() == 1;
    return result;
}

SweepResult censorship_size_sweep(const std::vector<std::size_t> &payload_sizes) {
    if (payload_sizes.size() < 2) {
        throw std::invalid_argument{"sweep needs at least two payload sizes"};
    }
    Chain chain{HashAlgorithm::keccak256};
    SweepResult result;
    std::vector<double> x;
    std::vector<double> yq;
    std::vector<double> yr;
    for (auto size : payload_sizes) {
        // Filter and response padded to exactly `size` bytes.
        std::string filter = R"({"id":"341576","pad":")";
        filter += std::string(size > filter.size() + 2 ? size - filter.size() - 2 : 0, 'q') + "\"}";
        filter.resize(size, ' ');
        std::string response(size, 'r');

        auto q = chain.a.send(chain.cc, "query", authoritative_args::query(as_bytes(filter)), chain.config.fee_query);
        require_ok(q, "query");
        auto id = decode_u64(q.return_value);
        auto r = chain.p.send(chain.cc, "store_response", authoritative_args::store_response(id, as_bytes(response)));
        require_ok(r, "store_response");

        auto qb = chain.trace_bytes(q);
        auto rb = chain.trace_bytes(r);
        result.samples.push_back({0, CostKind::query, 0, 0, q.hash_ops, 0, 0, size, qb});
        result.samples.push_back({0, CostKind::response, 0, 0, r.hash_ops, 0, 0, size, rb});
        x.push_back(static_cast<double>(size));
        yq.push_back(static_cast<double>(qb));
        yr.push_back(static_cast<double>(rb));
        auto gap = std::abs(static_cast<double>(rb) - static_cast<double>(qb)) / static_cast<double>(qb);
        result.max_relative_gap = std::max(result.max_relative_gap, gap);
    }
    result.query = fit_linear(x, yq);
    result.response = fit_linear(x, yr);
    return result;
}

std::string to_csv(std::span<const CostSample> samples) {
    std::ostringstream out;
    out << "n,kind,trial,index,hash_ops,proof_length,parse_tokens,payload_bytes,trace_bytes\n";
    for (const auto &s : samples) {
        out << s.n << ',' << to_string(s.kind) << ',' << s.trial << ',' << s.index << ',' << s.hash_ops << ',' << s.proof_length << ','
            << s.parse_tokens << ',' << s.payload_bytes << ',' << s.trace_bytes << '\n';
    }
    return out.str();
}

double table_membership_slope() {
    std::vector<double> y;
    for (auto gas : kTableMembershipHashGas) {
        y.push_back(gas / kTableGasPerHash);
    }
    return fit_linear(kTableLog2Sizes, y).b;
}

nlohmann::json fit_report(const SuiteResult &suite) {
    nlohmann::json parse = nlohmann::json::array();
    for (const auto &s : suite.samples) {
        if (s.kind == CostKind::parse) {
            parse.push_back({{"n", s.n}, {"parse_tokens", s.parse_tokens}});
        }
    }
    auto table_slope = table_membership_slope();
    return {{"model", "hash_ops = a + b * log2(n)"},
            {"membership", to_json(suite.membership)},
            {"consistency", to_json(suite.consistency)},
            {"membership_samples", to_json(suite.membership_samples)},
            {"parse_constant", suite.parse_constant},
            {"parse", parse},
            {"table_membership_slope_hashes", table_slope},
            {"membership_slope_ratio", table_slope == 0 ? 0.0 : suite.membership.b / table_slope},
            {"warnings", suite.warnings}};
}

nlohmann::json sweep_report(const SweepResult &sweep) {
    return {{"model", "trace_bytes = a + b * payload_bytes"},
            {"query", to_json(sweep.query)},
            {"response", to_json(sweep.response)},
            {"max_relative_gap", sweep.max_relative_gap}};
}

} // namespace authfeed::bench
