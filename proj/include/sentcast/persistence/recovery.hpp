#pragma once

#include <sentcast/persistence/checkpoint.hpp>
#include <sentcast/persistence/event_log.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sentcast::persistence {

/// What a resumed process must do: restore `checkpoint` (if any), then re-apply `replay`.
struct RecoveryPlan {
    std::optional<Checkpoint> checkpoint;
    std::vector<LogRecord> replay; ///< committed records after the checkpoint, in order
    std::uint64_t next_sequence = 0;
    bool torn_tail = false;
    std::uint64_t discarded_records = 0; ///< intact but uncommitted trailing records
    std::vector<std::string> warnings;
};

/// Scans the log and picks the newest snapshot that decodes, passes its CRC and has a
/// checkpoint_marker in the committed log. Older snapshots and then a full replay are the
/// fallbacks. The log file itself is not modified; EventLog::open performs the truncation.
inline RecoveryPlan plan_recovery(const std::filesystem::path& dir) {
    RecoveryPlan plan;
    auto scan = scan_log(dir / EventLog::kFileName);
    plan.torn_tail = scan.torn_tail;
    auto keep = scan.committed_count();
    plan.discarded_records = scan.records.size() - keep;
    scan.records.resize(keep);
    plan.next_sequence = keep;

    std::set<std::uint64_t> marked;
    for (const auto& r : scan.records) {
        if (r.kind == RecordKind::checkpoint_marker) {
            marked.insert(r.data.at("up_to_sequence").get<std::uint64_t>());
        }
    }
    for (auto seq : list_checkpoints(dir)) {
        if (!marked.contains(seq)) {
            plan.warnings.push_back("ignoring checkpoint " + std::to_string(seq) + " without a log marker");
            continue;
        }
        try {
            plan.checkpoint = read_checkpoint(checkpoint_path(dir, seq));
            break;
        } catch (const Error& e) {
            plan.warnings.push_back("ignoring checkpoint " + std::to_string(seq) + ": " + e.what());
        }
    }
    std::uint64_t from = plan.checkpoint ? plan.checkpoint->up_to_sequence + 1 : 0;
    for (auto& r : scan.records) {
        if (r.seq >= from) {
            plan.replay.push_back(std::move(r));
        }
    }
    return plan;
}

} // namespace sentcast::persistence
