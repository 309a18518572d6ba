use super::{DetectionOutcome, ParticleState, StepProposal};
use crate::geometry::{NamGeometry, Vec3};
use crate::stochastics::RandomStream;

/// Endpoint-only detection: the distance is tested after the full step.
/// Crossings of a boundary that the endpoint does not show are missed.
#[inline]
pub fn detect_time_stepped(state: &ParticleState, proposal: &StepProposal, geometry: &NamGeometry) -> DetectionOutcome {
    let end = state.position + proposal.displacement;
    let t_end = state.time + proposal.dt;
    let d = end.norm();
    if d <= geometry.reaction_radius() {
        DetectionOutcome::Reaction { hit_time: t_end, position: end }
    } else if d >= geometry.escape_radius() {
        DetectionOutcome::Escape { exit_time: t_end, position: end }
    } else {
        DetectionOutcome::Continue(ParticleState::new(end, t_end))
    }
}

/// First parameter `s ∈ (0, 1]` at which `start + s·disp` enters the sphere
/// of `radius`, for a start point outside it.
#[inline]
pub fn segment_sphere_entry(start: Vec3, disp: Vec3, radius: f64) -> Option<f64> {
    let c = start.norm_squared() - radius * radius;
    if c <= 0.0 {
        return Some(f64::MIN_POSITIVE);
    }
    let a = disp.norm_squared();
    let b = start.dot(disp);
    if a == 0.0 || b >= 0.0 {
        return None;
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    // Smaller root in the cancellation-free form c / (−b + √disc).
    let s = c / (-b + disc.sqrt());
    (s <= 1.0).then_some(s)
}

/// Parameter `s ∈ (0, 1]` at which `start + s·disp` leaves the sphere of
/// `radius`, for a start point inside it.
#[inline]
pub fn segment_sphere_exit(start: Vec3, disp: Vec3, radius: f64) -> Option<f64> {
    let c = start.norm_squared() - radius * radius;
    if c >= 0.0 {
        return Some(f64::MIN_POSITIVE);
    }
    let a = disp.norm_squared();
    if a == 0.0 || (start + disp).norm_squared() < radius * radius {
        // Convexity: both ends inside means the whole segment is inside.
        return None;
    }
    let b = start.dot(disp);
    let root = (b * b - a * c).sqrt();
    let s = if b >= 0.0 { -c / (b + root) } else { (root - b) / a };
    (s <= 1.0).then_some(s)
}

/// Exact crossing detection along the straight step segment.
///
/// The displacement is traversed at constant velocity over `dt`; the
/// earliest intersection with the reaction sphere or the escape sphere in
/// `(0, 1]` of the segment ends the trajectory at the corresponding
/// fractional time. A zero displacement only advances time.
#[inline]
pub fn detect_event_triggered(state: &ParticleState, proposal: &StepProposal, geometry: &NamGeometry) -> DetectionOutcome {
    let p = state.position;
    let d = proposal.displacement;
    let t_end = state.time + proposal.dt;
    if d.is_zero() {
        return DetectionOutcome::Continue(ParticleState::new(p, t_end));
    }
    let hit = segment_sphere_entry(p, d, geometry.reaction_radius());
    let exit = segment_sphere_exit(p, d, geometry.escape_radius());
    match (hit, exit) {
        (Some(s), e) if e.is_none_or(|e| s <= e) => DetectionOutcome::Reaction {
            hit_time: state.time + s * proposal.dt,
            position: p + d.scale(s),
        },
        (_, Some(s)) => DetectionOutcome::Escape {
            exit_time: state.time + s * proposal.dt,
            position: p + d.scale(s),
        },
        _ => DetectionOutcome::Continue(ParticleState::new(p + d, t_end)),
    }
}

/// Probability that a Brownian bridge between two points on the same side
/// of a boundary at distances `d0`, `d1` touches it during a step with
/// per-component variance `2·D·dt` (planar approximation).
///
/// Exponents beyond 700 (probability below 1e-304) are treated as zero.
#[inline]
fn bridge_probability(d0: f64, d1: f64, diffusion: f64, dt: f64) -> f64 {
    let x = d0 * d1 / (diffusion * dt);
    if x > 700.0 {
        0.0
    } else {
        (-x).exp()
    }
}

/// Tests whether the continuous Brownian path between two committed
/// positions touched a boundary the straight segment did not reach.
///
/// Draws a uniform only when the crossing probability is non-zero. Detected
/// crossings are time-stamped at the step midpoint and located at the
/// midpoint projected onto the crossed sphere.
pub fn bridge_crossing(
    from: &ParticleState,
    to: &ParticleState,
    geometry: &NamGeometry,
    stream: &mut RandomStream,
) -> Option<DetectionOutcome> {
    bridge_crossing_with_distances(from, to, from.distance(), to.distance(), geometry, stream)
}

#[inline]
pub(super) fn bridge_crossing_with_distances(
    from: &ParticleState,
    to: &ParticleState,
    r0: f64,
    r1: f64,
    geometry: &NamGeometry,
    stream: &mut RandomStream,
) -> Option<DetectionOutcome> {
    let dt = to.time - from.time;
    let diffusion = geometry.diffusion();
    let a = geometry.reaction_radius();
    let q = geometry.escape_radius();
    let mid_time = from.time + 0.5 * dt;
    let mid = || (from.position + to.position).scale(0.5);

    let p_react = bridge_probability(r0 - a, r1 - a, diffusion, dt);
    if p_react > 0.0 && stream.next_uniform() < p_react {
        return Some(DetectionOutcome::Reaction {
            hit_time: mid_time,
            position: project(mid(), a),
        });
    }
    let p_escape = bridge_probability(q - r0, q - r1, diffusion, dt);
    if p_escape > 0.0 && stream.next_uniform() < p_escape {
        return Some(DetectionOutcome::Escape {
            exit_time: mid_time,
            position: project(mid(), q),
        });
    }
    None
}

fn project(p: Vec3, radius: f64) -> Vec3 {
    let n = p.norm();
    if n > 0.0 {
        p.scale(radius / n)
    } else {
        Vec3::new(0.0, 0.0, radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> NamGeometry {
        NamGeometry::new(10.0, 50.0, 100.0, 1.0).unwrap()
    }

    fn step(p: Vec3, d: Vec3) -> (ParticleState, StepProposal) {
        (ParticleState::new(p, 0.0), StepProposal { displacement: d, dt: 0.3 })
    }

    #[test]
    fn time_stepped_endpoint_inside_reaction_sphere() {
        let (s, p) = step(Vec3::new(0.0, 0.0, 20.0), Vec3::new(0.0, 0.0, -11.0));
        match detect_time_stepped(&s, &p, &geom()) {
            DetectionOutcome::Reaction { hit_time, position } => {
                assert_eq!(hit_time, 0.3);
                assert_eq!(position.norm(), 9.0);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn time_stepped_misses_interior_crossing() {
        // 11 → through the sphere → ends at distance 12 on the far side.
        let (s, p) = step(Vec3::new(0.0, 0.0, 11.0), Vec3::new(0.0, 0.0, -23.0));
        assert!(matches!(detect_time_stepped(&s, &p, &geom()), DetectionOutcome::Continue(_)));
        // The segment-exact detector sees it.
        match detect_event_triggered(&s, &p, &geom()) {
            DetectionOutcome::Reaction { hit_time, .. } => assert!((hit_time - 0.3 / 23.0).abs() < 1e-15),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn time_stepped_escape() {
        let (s, p) = step(Vec3::new(0.0, 0.0, 95.0), Vec3::new(0.0, 0.0, 6.0));
        assert!(matches!(detect_time_stepped(&s, &p, &geom()), DetectionOutcome::Escape { .. }));
    }

    #[test]
    fn event_triggered_fractional_hit() {
        let (s, p) = step(Vec3::new(20.0, 0.0, 0.0), Vec3::new(-15.0, 0.0, 0.0));
        match detect_event_triggered(&s, &p, &geom()) {
            DetectionOutcome::Reaction { hit_time, position } => {
                assert!((hit_time - 0.3 * 2.0 / 3.0).abs() < 1e-15);
                assert!((position.x - 10.0).abs() < 1e-12);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn event_triggered_no_crossing() {
        let (s, p) = step(Vec3::new(0.0, 0.0, 50.0), Vec3::new(1.0, 0.0, 0.0));
        match detect_event_triggered(&s, &p, &geom()) {
            DetectionOutcome::Continue(n) => {
                assert_eq!(n.position, Vec3::new(1.0, 0.0, 50.0));
                assert_eq!(n.time, 0.3);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn event_triggered_escape_time() {
        let (s, p) = step(Vec3::new(0.0, 96.0, 0.0), Vec3::new(0.0, 8.0, 0.0));
        match detect_event_triggered(&s, &p, &geom()) {
            DetectionOutcome::Escape { exit_time, position } => {
                assert!((exit_time - 0.15).abs() < 1e-15);
                assert!((position.norm() - 100.0).abs() < 1e-12);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn zero_displacement_advances_time() {
        let (s, p) = step(Vec3::new(0.0, 0.0, 50.0), Vec3::ZERO);
        assert_eq!(
            detect_event_triggered(&s, &p, &geom()),
            DetectionOutcome::Continue(ParticleState::new(Vec3::new(0.0, 0.0, 50.0), 0.3))
        );
    }

    #[test]
    fn entering_and_leaving_takes_first_root_dense_oracle() {
        // Chord through the sphere, both endpoints outside.
        let start = Vec3::new(-14.0, 3.0, 1.0);
        let disp = Vec3::new(28.0, -1.0, 0.5);
        let (s, p) = step(start, disp);
        let outcome = detect_event_triggered(&s, &p, &geom());
        // Oracle: first sub-sample whose distance drops to a.
        let n = 2_000_000;
        let first = (0..=n)
            .map(|i| i as f64 / n as f64)
            .find(|&u| (start + disp.scale(u)).norm() <= 10.0)
            .unwrap();
        match outcome {
            DetectionOutcome::Reaction { hit_time, .. } => {
                let frac = hit_time / 0.3;
                assert!(frac <= first && first - frac <= 1.0 / n as f64 + 1e-12, "{frac} vs {first}");
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn bridge_far_from_boundaries_draws_nothing() {
        use crate::geometry::RngKind;
        let mut a = RandomStream::new(RngKind::MersenneTwister, 4);
        let mut b = RandomStream::new(RngKind::MersenneTwister, 4);
        let from = ParticleState::new(Vec3::new(0.0, 0.0, 50.0), 0.0);
        let to = ParticleState::new(Vec3::new(0.0, 0.3, 50.2), 0.1);
        assert!(bridge_crossing(&from, &to, &geom(), &mut a).is_none());
        assert_eq!(a.next_uniform(), b.next_uniform());
    }

    #[test]
    fn bridge_at_boundary_is_certain() {
        use crate::geometry::RngKind;
        let mut s = RandomStream::new(RngKind::MersenneTwister, 4);
        let from = ParticleState::new(Vec3::new(0.0, 0.0, 10.0), 0.0);
        let to = ParticleState::new(Vec3::new(0.0, 0.0, 10.5), 0.1);
        match bridge_crossing(&from, &to, &geom(), &mut s) {
            Some(DetectionOutcome::Reaction { hit_time, position }) => {
                assert_eq!(hit_time, 0.05);
                assert!((position.norm() - 10.0).abs() < 1e-12);
            }
            o => panic!("{o:?}"),
        }
    }
}
