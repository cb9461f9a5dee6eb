#include "nwp/rollout.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>

#include "nwp/error.hpp"
#include "nwp/fieldio.hpp"
#include "nwp/hash.hpp"

extern char** environ;

namespace nwp {

int RolloutPlan::total_hours() const noexcept { return std::accumulate(steps.begin(), steps.end(), 0); }

std::vector<int> RolloutPlan::cumulative_leads() const {
    std::vector<int> out;
    int sum = 0;
    for (int s : steps) out.push_back(sum += s);
    return out;
}

RolloutPlan schedule_steps(int lead_hours, std::span<const int> horizons) {
    if (lead_hours < 0) throw ScheduleError(fmt::format("negative lead {} h", lead_hours));
    if (horizons.empty()) throw ScheduleError("no forecast horizons available");
    std::vector<int> hs(horizons.begin(), horizons.end());
    for (int h : hs)
        if (h <= 0) throw ScheduleError(fmt::format("invalid horizon {} h", h));
    std::sort(hs.begin(), hs.end(), std::greater<>());
    hs.erase(std::unique(hs.begin(), hs.end()), hs.end());

    RolloutPlan plan;
    if (lead_hours == 0) return plan;

    const int g = std::accumulate(hs.begin(), hs.end(), 0, [](int a, int b) { return std::gcd(a, b); });
    if (lead_hours % g != 0)
        throw ScheduleError(fmt::format("lead {} h is not a multiple of the horizons' gcd {} h", lead_hours, g));

    int remaining = lead_hours;
    for (int h : hs)
        while (h <= remaining) {
            plan.steps.push_back(h);
            remaining -= h;
        }
    if (remaining == 0) return plan;

    // Greedy dead-ended; minimum-step coin change.
    constexpr int kInf = std::numeric_limits<int>::max();
    std::vector<int> best(static_cast<std::size_t>(lead_hours) + 1, kInf);
    std::vector<int> choice(best.size(), 0);
    best[0] = 0;
    for (int v = 1; v <= lead_hours; ++v)
        for (int h : hs)
            if (h <= v && best[static_cast<std::size_t>(v - h)] != kInf &&
                best[static_cast<std::size_t>(v - h)] + 1 < best[static_cast<std::size_t>(v)]) {
                best[static_cast<std::size_t>(v)] = best[static_cast<std::size_t>(v - h)] + 1;
                choice[static_cast<std::size_t>(v)] = h;
            }
    if (best[static_cast<std::size_t>(lead_hours)] == kInf)
        throw ScheduleError(fmt::format("lead {} h cannot be reached with the available horizons", lead_hours));
    plan.steps.clear();
    for (int v = lead_hours; v > 0; v -= choice[static_cast<std::size_t>(v)])
        plan.steps.push_back(choice[static_cast<std::size_t>(v)]);
    std::sort(plan.steps.begin(), plan.steps.end(), std::greater<>());
    return plan;
}

// ---------------------------------------------------------------------------

RolloutPlan plan_through_leads(std::span<const int> leads, std::span<const int> horizons) {
    std::vector<int> sorted(leads.begin(), leads.end());
    std::sort(sorted.begin(), sorted.end());
    RolloutPlan plan;
    int reached = 0;
    for (int lead : sorted) {
        if (lead <= reached)
            throw ScheduleError(fmt::format("leads must be positive and distinct, got {} h", lead));
        const auto gap = schedule_steps(lead - reached, horizons);
        plan.steps.insert(plan.steps.end(), gap.steps.begin(), gap.steps.end());
        reached = lead;
    }
    return plan;
}

BackendSpec BackendSpec::persistence(std::vector<int> horizons) {
    BackendSpec b;
    b.kind = BackendKind::Persistence;
    b.horizons = std::move(horizons);
    return b;
}

BackendSpec BackendSpec::advection(int cells, int per_hours, std::vector<int> horizons) {
    BackendSpec b;
    b.kind = BackendKind::Advection;
    b.advection_cells = cells;
    b.advection_per_hours = per_hours;
    b.horizons = std::move(horizons);
    return b;
}

BackendSpec BackendSpec::external(std::string command, std::vector<int> horizons) {
    BackendSpec b;
    b.kind = BackendKind::External;
    b.command = std::move(command);
    b.horizons = std::move(horizons);
    return b;
}

BackendSpec parse_backend(std::string_view text) {
    if (text == "persistence") return BackendSpec::persistence();
    if (text.starts_with("advection:")) {
        const std::string_view rest = text.substr(10);
        const auto slash = rest.find('/');
        auto parse_int = [&](std::string_view part, int& value) {
            const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
            if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size())
                throw Error(fmt::format("invalid advection backend '{}'", text));
        };
        int cells = 0, per = 24;
        parse_int(rest.substr(0, slash), cells);
        if (slash != std::string_view::npos) parse_int(rest.substr(slash + 1), per);
        if (per <= 0) throw Error(fmt::format("invalid advection backend '{}'", text));
        return BackendSpec::advection(cells, per);
    }
    if (text.starts_with("external:") && text.size() > 9) return BackendSpec::external(std::string(text.substr(9)));
    throw Error(fmt::format("unknown backend '{}' (persistence, advection:<cells>[/<hours>], external:<command>)", text));
}

std::string describe(const BackendSpec& b) {
    switch (b.kind) {
        case BackendKind::Persistence: return "persistence";
        case BackendKind::Advection: return fmt::format("advection:{}/{}", b.advection_cells, b.advection_per_hours);
        case BackendKind::External: return fmt::format("external:{}", b.command);
    }
    return "?";
}

StateSet builtin_step(const StateSet& state, const BackendSpec& backend, int step_hours) {
    const TimePoint next = state.valid_time() + std::chrono::hours{step_hours};
    switch (backend.kind) {
        case BackendKind::Persistence: return state.with_valid_time(next);
        case BackendKind::Advection: {
            const long long scaled = static_cast<long long>(backend.advection_cells) * step_hours;
            if (backend.advection_per_hours <= 0 || scaled % backend.advection_per_hours != 0)
                throw RolloutError(fmt::format("advection of {} cells per {} h does not give whole cells for a {} h step",
                                               backend.advection_cells, backend.advection_per_hours, step_hours));
            const auto& g = state.grid();
            const auto nlon = static_cast<long long>(g.nlon);
            const auto shift = static_cast<std::size_t>(((scaled / backend.advection_per_hours) % nlon + nlon) % nlon);
            std::vector<Field> out;
            out.reserve(state.fields().size());
            for (const auto& f : state.fields()) {
                if (shift == 0) {
                    out.push_back(f);
                    continue;
                }
                const auto in = f.values();
                std::vector<float> values(in.size());
                for (std::size_t i = 0; i < g.nlat; ++i) {
                    const auto row = in.subspan(i * g.nlon, g.nlon);
                    float* dst = values.data() + i * g.nlon;
                    // Eastward: column j moves to (j + shift) mod nlon.
                    std::copy(row.begin(), row.end() - static_cast<std::ptrdiff_t>(shift), dst + shift);
                    std::copy(row.end() - static_cast<std::ptrdiff_t>(shift), row.end(), dst);
                }
                out.push_back(f.with_values(std::move(values)));
            }
            return StateSet(next, state.source_label(), g, std::move(out));
        }
        case BackendKind::External: break;
    }
    throw RolloutError("builtin_step called with an external backend");
}

// ---------------------------------------------------------------------------

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    return out + "'";
}

/// Runs `/bin/sh -c command` with stdout and stderr sent to `capture`.
int run_shell(const std::string& command, const std::filesystem::path& capture) {
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&actions, 2, capture.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, 2, 1);

    std::string sh = "/bin/sh", dash_c = "-c", cmd = command;
    char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) throw RolloutError(fmt::format("cannot spawn backend: {}", std::strerror(rc)));

    int status = 0;
    while (waitpid(pid, &status, 0) < 0)
        if (errno != EINTR) throw RolloutError("waitpid failed");
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string file_hash(const std::filesystem::path& p) {
    Fnv1a64 h;
    h.update(slurp(p));
    return h.hex();
}

class ExternalStepper {
public:
    ExternalStepper(const BackendSpec& backend, const RolloutOptions& options) : backend_(backend), options_(options) {
        std::filesystem::create_directories(options_.work_dir);
    }

    StateSet step(const StateSet& state, std::size_t index, int hours, bool check_determinism) {
        const auto in = options_.work_dir / fmt::format("step{:03d}_in.nws", index);
        const auto out = options_.work_dir / fmt::format("step{:03d}_out.nws", index);
        write_archive(state, in);
        const std::string first_hash = invoke(in, out, index, hours);
        if (check_determinism) {
            const auto again = options_.work_dir / fmt::format("step{:03d}_out_repeat.nws", index);
            const std::string second_hash = invoke(in, again, index, hours);
            if (second_hash != first_hash)
                log(fmt::format("warning: backend is not deterministic: step {} outputs hash {} vs {}", index + 1,
                                first_hash, second_hash));
            else
                log(fmt::format("determinism check passed for step {} (hash {})", index + 1, first_hash));
            if (!options_.keep_files) std::filesystem::remove(again);
        }

        StateSet result = [&] {
            try {
                return read_archive(out);
            } catch (const Error& e) {
                throw RolloutError(fmt::format("step {} ({} h): malformed backend output: {}", index + 1, hours, e.what()));
            }
        }();
        if (!(result.grid() == state.grid()))
            throw RolloutError(fmt::format("step {} ({} h): backend output grid {} differs from input grid {}", index + 1,
                                           hours, describe(result.grid()), describe(state.grid())));
        if (!options_.keep_files) {
            std::filesystem::remove(in);
            std::filesystem::remove(out);
        }
        return result;
    }

private:
    std::string invoke(const std::filesystem::path& in, const std::filesystem::path& out, std::size_t index, int hours) {
        std::filesystem::remove(out);
        const auto capture = options_.work_dir / fmt::format("step{:03d}.log", index);
        const std::string cmd = fmt::format("{} --in {} --out {} --step-hours {}", backend_.command,
                                            shell_quote(in.string()), shell_quote(out.string()), hours);
        log(fmt::format("step {}: {}", index + 1, cmd));
        const int status = run_shell(cmd, capture);
        const std::string captured = slurp(capture);
        if (!captured.empty()) log(captured);
        if (!options_.keep_files) std::filesystem::remove(capture);
        if (status != 0)
            throw RolloutError(fmt::format("step {} ({} h): backend exited with status {}", index + 1, hours, status));
        if (!std::filesystem::exists(out))
            throw RolloutError(fmt::format("step {} ({} h): backend wrote no output archive", index + 1, hours));
        return file_hash(out);
    }

    void log(const std::string& line) const {
        if (options_.log) *options_.log << line << (line.ends_with('\n') ? "" : "\n");
    }

    const BackendSpec& backend_;
    const RolloutOptions& options_;
};

}  // namespace

std::vector<LeadState> run_rollout(const StateSet& ic, const BackendSpec& backend, const RolloutPlan& plan,
                                   std::span<const int> emit_leads, const RolloutOptions& options) {
    std::vector<LeadState> series;
    run_rollout(ic, backend, plan, emit_leads, [&series](LeadState s) { series.push_back(std::move(s)); }, options);
    return series;
}

void run_rollout(const StateSet& ic, const BackendSpec& backend, const RolloutPlan& plan,
                 std::span<const int> emit_leads, const std::function<void(LeadState)>& on_emit,
                 const RolloutOptions& options) {
    ic.require_canonical();
    for (int s : plan.steps)
        if (std::find(backend.horizons.begin(), backend.horizons.end(), s) == backend.horizons.end())
            throw RolloutError(fmt::format("plan step {} h is not a horizon of backend {}", s, describe(backend)));

    const auto reachable = plan.cumulative_leads();
    std::set<int> pending;
    for (int lead : emit_leads) {
        if (std::find(reachable.begin(), reachable.end(), lead) == reachable.end())
            throw RolloutError(fmt::format("emit lead {} h is not reached by the plan", lead));
        pending.insert(lead);
    }

    std::optional<ExternalStepper> external;
    if (backend.kind == BackendKind::External) {
        if (backend.command.empty()) throw RolloutError("external backend has no command");
        if (backend.require_canonical_grid && !(ic.grid() == GridSpec::canonical()))
            throw RolloutError(fmt::format("external backend needs the canonical grid, initial state is on {}",
                                           describe(ic.grid())));
        external.emplace(backend, options);
    }

    StateSet current = ic;
    int lead = 0;
    for (std::size_t k = 0; k < plan.steps.size() && !pending.empty(); ++k) {
        const int hours = plan.steps[k];
        current = external ? external->step(current, k, hours, options.verify_determinism && k == 0)
                           : builtin_step(current, backend, hours);
        lead += hours;
        RangeLimits no_ranges;
        no_ranges.enabled = false;
        const auto report = validate_state(current, no_ranges);
        if (report.has_hard_errors())
            throw RolloutError(fmt::format("step {} ({} h, lead {} h): invalid backend output: {}", k + 1, hours, lead,
                                           report.summary()));
        if (options.log)
            *options.log << fmt::format("step {} done: +{} h -> lead {} h\n", k + 1, hours, lead);
        if (pending.erase(lead))
            on_emit({lead, current.with_valid_time(ic.valid_time() + std::chrono::hours{lead})
                               .with_source_label(ic.source_label())});
    }
}

}  // namespace nwp
