#pragma once

#include "maxrank/grid.hpp"
#include "maxrank/identity_lab.hpp"
#include "maxrank/operators.hpp"
#include "maxrank/solver.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace maxrank {

/// Boundary data generator.
///   flat:c0,c1                  u0 = c0, u1 = c1
///   cosine:a0,a1,k1[,k2,k3]     u0 = a0 cos(2 pi k.x), u1 = 1 + a1 sin(2 pi k.x)
///   mix:c0,c1;S/A/P/k1[/k2/k3];...
///                               slice S in {0,1} gets A cos(2 pi (k.x + P)) on top of c_S
struct BoundaryGen {
    struct Mode {
        int slice = 0;
        double amp = 0.0;
        double phase = 0.0;  // in turns
        std::array<int, 3> k{};
    };

    std::string text;
    double c0 = 0.0;
    double c1 = 1.0;
    std::vector<Mode> modes;

    /// 1 - sum |a| (2 pi |k|)^2 per slice, minimised over both slices.
    double guarantee() const;
    void fill(const GridSpec& spec, std::vector<double>& u0, std::vector<double>& u1) const;
};

BoundaryGen parse_boundary(const std::string& text, int n);

enum class Command { Solve, Verify, Sweep, Identity, Report };

std::string to_string(Command c);
Command command_from_string(const std::string& s);

struct RunConfig {
    Command command = Command::Solve;
    OperatorKind kind = OperatorKind::Donaldson;
    int n = 2;
    int nx = 32;
    int nt = 32;
    std::vector<double> eps{1.0, 0.1, 0.01};
    std::string boundary = "cosine:0.012,0.012,1";
    SolverConfig solver;
    VerifyOptions verify;
    int continuation = 0;  // > 0 forces the s-homotopy with that many uniform steps
    int probe_k = 0;       // 0 selects K = n

    std::string check = "all";
    int seeds = 100;
    std::uint64_t seed = 0;
    SampleMode mode = SampleMode::Exact;
    double delta = 0.0;

    std::string out_dir = "out";
    bool dump_fields = true;
    std::string config_file;  // hashed into the manifest when set

    void validate() const;
};

/// Flat JSON schema; unknown keys are rejected.
RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& c);

/// Parses "exact" or "scaled:DELTA".
void parse_mode(const std::string& text, SampleMode& mode, double& delta);

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitValidation = 2, kExitNonConvergence = 3, kExitViolation = 4 };

struct RunOutcome {
    int exit_code = kExitOk;
    std::string report_json;
};

/// Executes one command and writes report.json, manifest.json and the
/// command's CSV/field artifacts into out_dir. Never throws.
RunOutcome run(const RunConfig& config);

/// Parses config_from_json and runs it. A config that fails to parse yields
/// exit code 2 and a report holding only the error object.
RunOutcome run_json(const std::string& config_text);

/// Git blob hash: sha1("blob <len>\0" + bytes), lowercase hex.
std::string git_blob_sha1(const std::string& bytes);

} // namespace maxrank
