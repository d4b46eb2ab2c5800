#include "planesim/ev_manager.hpp"

#include <algorithm>

namespace planesim {

void EvManager::populate(uint32_t src_nic, uint32_t dst_nic, uint32_t src_group, uint32_t dst_group,
                         const Denylist& denylist, SimTime now) {
    const uint32_t P = params_.planes;
    // Equal split across planes; T0-local QPs get exactly the P direct paths.
    uint32_t per_plane = params_.t0_local ? 1 : std::max<uint32_t>(1, params_.size_target / P);
    uint32_t backup_per_plane = params_.t0_local ? 0 : std::max<uint32_t>(1, params_.backup_target / P);

    for (uint32_t p = 0; p < P; ++p) {
        PlaneSet& ps = plane_[p];
        std::vector<uint32_t> candidates; // uplink choices, or {0} for local
        if (params_.t0_local) {
            PathId path{p, 0, 0, true};
            if (!denylist.denies(src_nic, dst_nic, src_group, dst_group, path)) candidates.push_back(0);
        } else {
            for (uint32_t u = 0; u < params_.t0_uplinks; ++u) {
                PathId path{p, u, 0, false};
                if (!denylist.denies(src_nic, dst_nic, src_group, dst_group, path)) candidates.push_back(u);
            }
        }
        if (candidates.empty()) {
            ps.enabled = false;
            continue;
        }
        rng_.shuffle(candidates);
        uint32_t n_active = std::min<uint32_t>(per_plane, static_cast<uint32_t>(candidates.size()));
        uint32_t n_backup =
            std::min<uint32_t>(backup_per_plane, static_cast<uint32_t>(candidates.size()) - n_active);
        ps.nominal = n_active;
        for (uint32_t i = 0; i < n_active + n_backup; ++i) {
            EvRecord r;
            r.plane = p;
            r.state = i < n_active ? EvState::Active : EvState::Backup;
            r.value = encode_ev(EvFields{p, params_.t0_local ? 0 : candidates[i], 0},
                                static_cast<uint16_t>(rng_.next_u64() & 0xffff));
            uint32_t idx = static_cast<uint32_t>(pool_.size());
            pool_.push_back(r);
            by_value_[r.value] = idx;
            if (r.state == EvState::Active) {
                ps.active.push_back(idx);
                emit(now, r, "initial");
            } else {
                ps.backup.push_back(idx);
            }
        }
    }
    uint32_t first = UINT32_MAX;
    for (uint32_t p = 0; p < P; ++p) {
        if (!plane_[p].enabled) continue;
        if (first == UINT32_MAX) first = static_cast<uint32_t>(plane_[p].active.size());
        else if (plane_[p].active.size() != first) equality_warning_ = true;
    }
}

const EvRecord* EvManager::select(SimTime now, uint32_t exclude) {
    const uint32_t P = params_.planes;
    uint32_t total = 0;
    for (uint32_t p = 0; p < P; ++p)
        if (plane_usable(p)) total += static_cast<uint32_t>(plane_[p].active.size());
    if (total == 0) return nullptr;

    EvRecord* fallback = nullptr; // least recently penalized
    EvRecord* excluded_ok = nullptr;
    for (uint32_t scanned = 0, tries = 0; scanned < total && tries < total + P; ++tries) {
        plane_cursor_ = (plane_cursor_ + 1) % P;
        PlaneSet& ps = plane_[plane_cursor_];
        if (!plane_usable(plane_cursor_) || ps.active.empty()) continue;
        ps.cursor = (ps.cursor + 1) % static_cast<uint32_t>(ps.active.size());
        EvRecord& r = pool_[ps.active[ps.cursor]];
        ++scanned;
        if (r.penalty_until <= now) {
            if (r.value == exclude) {
                excluded_ok = &r;
                continue;
            }
            return &r;
        }
        if (r.value != exclude && (!fallback || r.last_penalty < fallback->last_penalty)) fallback = &r;
    }
    if (fallback) return fallback;
    return excluded_ok; // only the excluded EV remains usable
}

bool EvManager::penalize(uint32_t value, SimTime until, SimTime now) {
    EvRecord* r = find(value);
    if (!r) return false;
    r->penalty_until = std::max(r->penalty_until, until);
    r->last_penalty = now;
    return true;
}

void EvManager::erase_value(std::vector<uint32_t>& v, uint32_t idx) {
    auto it = std::find(v.begin(), v.end(), idx);
    if (it != v.end()) v.erase(it);
}

bool EvManager::retire(uint32_t value, SimTime now) {
    auto it = by_value_.find(value);
    if (it == by_value_.end()) return false;
    EvRecord& r = pool_[it->second];
    if (r.state != EvState::Active) return false;
    if (plane_parked(r.plane)) return false; // losses explained by the down port
    PlaneSet& ps = plane_[r.plane];
    erase_value(ps.active, it->second);
    r.state = EvState::Retired;
    r.retired_since = now;
    r.probe_successes = 0;
    r.probe_outstanding = false;
    emit(now, r, "deactivated");
    promote_backup(r.plane, now);
    return true;
}

void EvManager::promote_backup(uint32_t plane, SimTime now) {
    PlaneSet& ps = plane_[plane];
    if (ps.backup.empty()) {
        equality_warning_ = true; // plane-equality suspended until resurrection
        return;
    }
    uint32_t pick = static_cast<uint32_t>(rng_.next_below(ps.backup.size()));
    uint32_t idx = ps.backup[pick];
    ps.backup.erase(ps.backup.begin() + pick);
    EvRecord& r = pool_[idx];
    r.state = EvState::Active;
    r.penalty_until = 0;
    ps.active.push_back(idx);
    emit(now, r, "activated");
}

void EvManager::probe_success(uint32_t value, uint32_t resurrect_threshold, SimTime now) {
    EvRecord* r = find(value);
    if (!r || r->state != EvState::Retired) return;
    r->probe_outstanding = false;
    if (++r->probe_successes < resurrect_threshold) return;
    r->state = EvState::Backup;
    r->probe_successes = 0;
    plane_[r->plane].backup.push_back(static_cast<uint32_t>(r - pool_.data()));
    emit(now, *r, "resurrected");
    // Refill the active set if retirement left it short.
    PlaneSet& ps = plane_[r->plane];
    if (ps.active.size() < ps.nominal && plane_usable(r->plane)) promote_backup(r->plane, now);
}

void EvManager::probe_failure(uint32_t value) {
    EvRecord* r = find(value);
    if (!r) return;
    r->probe_successes = 0;
    r->probe_outstanding = false;
}

std::vector<uint32_t> EvManager::retired_values() const {
    std::vector<uint32_t> out;
    for (const EvRecord& r : pool_)
        if (r.state == EvState::Retired) out.push_back(r.value);
    return out;
}

void EvManager::park_plane(uint32_t plane, bool remote, SimTime now) {
    PlaneSet& ps = plane_[plane];
    bool was = plane_parked(plane);
    (remote ? ps.parked_remote : ps.parked_local) = true;
    if (!was && log_) log_(now, 0, plane, "parked");
}

void EvManager::unpark_plane(uint32_t plane, bool remote, SimTime now) {
    PlaneSet& ps = plane_[plane];
    if (!(remote ? ps.parked_remote : ps.parked_local)) return;
    (remote ? ps.parked_remote : ps.parked_local) = false;
    if (plane_parked(plane) || !ps.enabled) return;
    if (log_) log_(now, 0, plane, "unparked");
    // EVs retired during the outage are trusted again: the local port state,
    // not path health, explains those losses.
    for (uint32_t i = 0; i < pool_.size(); ++i) {
        EvRecord& r = pool_[i];
        if (r.plane != plane || r.state != EvState::Retired) continue;
        if (ps.active.size() < ps.nominal) {
            r.state = EvState::Active;
            r.penalty_until = 0;
            ps.active.push_back(i);
            emit(now, r, "reactivated");
        } else {
            r.state = EvState::Backup;
            ps.backup.push_back(i);
            emit(now, r, "resurrected");
        }
        r.probe_successes = 0;
        r.probe_outstanding = false;
    }
    while (ps.active.size() < ps.nominal && !ps.backup.empty()) promote_backup(plane, now);
}

uint32_t EvManager::usable_plane_count() const {
    uint32_t n = 0;
    for (uint32_t p = 0; p < params_.planes; ++p)
        if (plane_usable(p)) ++n;
    return n;
}

bool EvManager::any_selectable() const {
    for (uint32_t p = 0; p < params_.planes; ++p)
        if (plane_usable(p) && !plane_[p].active.empty()) return true;
    return false;
}

EvRecord* EvManager::find(uint32_t value) {
    auto it = by_value_.find(value);
    return it == by_value_.end() ? nullptr : &pool_[it->second];
}

const EvRecord* EvManager::random_active() {
    uint32_t total = 0;
    for (uint32_t p = 0; p < params_.planes; ++p)
        if (plane_usable(p)) total += static_cast<uint32_t>(plane_[p].active.size());
    if (total == 0) return nullptr;
    uint32_t nth = static_cast<uint32_t>(rng_.next_below(total));
    for (uint32_t p = 0; p < params_.planes; ++p) {
        if (!plane_usable(p)) continue;
        if (nth < plane_[p].active.size()) return &pool_[plane_[p].active[nth]];
        nth -= static_cast<uint32_t>(plane_[p].active.size());
    }
    return nullptr;
}

} // namespace planesim
