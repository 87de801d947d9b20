use super::{DeviceId, ServiceId, Topology, WorldState};

/// Link-level reachability of `service` on `dst` from `src`.
///
/// A path may transit a firewall only if that firewall holds a rule matching
/// `(src, dst, service)`; the endpoints themselves are not filtered. Cut links
/// and closed gates carry no traffic. Because the firewall condition depends
/// on the fixed triple and not on the path, existence of a valid simple path
/// reduces to a breadth-first search over the admissible nodes.
pub fn reachable_in(topo: &Topology, state: &WorldState, src: DeviceId, dst: DeviceId, service: ServiceId) -> bool {
    if src == dst {
        return true;
    }
    let n = topo.devices.len();
    let mut seen = vec![false; n];
    let mut queue = Vec::with_capacity(n);
    seen[src.0] = true;
    queue.push(src);
    let mut head = 0;
    while head < queue.len() {
        let here = queue[head];
        head += 1;
        for &(next, link) in &topo.neighbors[here.0] {
            if seen[next.0] || state.cut[link.0] || !state.gate_open[link.0] {
                continue;
            }
            if next == dst {
                return true;
            }
            seen[next.0] = true;
            if topo.is_firewall(next) && !state.acl[next.0].iter().any(|r| r.matches(src, dst, service)) {
                continue;
            }
            queue.push(next);
        }
    }
    false
}
