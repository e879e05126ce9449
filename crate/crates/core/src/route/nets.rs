//! Net construction: randomized or name-aligned pin pairing, power rail
//! preroute, and randomized power straps.

use std::collections::BTreeMap;

use crate::abutment::Placement;
use crate::geom::Rect;
use crate::library::{Direction, LayerRule, PinKind, TechRules};
use crate::route::rng::Stream;
use crate::route::{Net, NetKind, PinPairing, Terminal};
use crate::Diagnostic;

/// Build the net list for a placed testcell.
///
/// Signal terminals are taken in canonical order (instance order, then the
/// cell's pin order). Random pairing shuffles them and cuts the result into
/// `net_degree`-sized nets; the final net absorbs any remainder, so every
/// net has at least two terminals. Aligned pairing instead groups
/// terminals by pin name and pairs them off within each group without
/// consuming randomness. POWER and GROUND pins always collect on the VDD
/// and VSS nets, which exist even when no cell exposes such pins because
/// rails and straps are drawn on them regardless.
pub fn assign_pin_nets(
    placement: &Placement,
    pairing: PinPairing,
    net_degree: usize,
    stream: &mut Stream,
) -> (Vec<Net>, Vec<Diagnostic>) {
    let mut diagnostics = Vec::new();
    let mut seen: BTreeMap<(String, String), ()> = BTreeMap::new();
    let mut signal: Vec<Terminal> = Vec::new();
    let mut power: Vec<Terminal> = Vec::new();
    let mut ground: Vec<Terminal> = Vec::new();
    for shape in &placement.pins {
        let key = (shape.instance.clone(), shape.pin.clone());
        if seen.insert(key, ()).is_some() {
            continue; // further rectangles of a pin already listed
        }
        let term = Terminal {
            instance: shape.instance.clone(),
            pin: shape.pin.clone(),
        };
        match shape.kind {
            PinKind::Signal => signal.push(term),
            PinKind::Power => power.push(term),
            PinKind::Ground => ground.push(term),
        }
    }

    let mut nets = Vec::new();
    match pairing {
        PinPairing::Random => {
            let degree = net_degree.max(2);
            stream.shuffle(&mut signal);
            let count = signal.len() / degree;
            if count == 0 && !signal.is_empty() {
                diagnostics.push(Diagnostic::warning(format!(
                    "only {} signal terminal(s) for net degree {}; none connected",
                    signal.len(),
                    degree
                )));
            }
            for i in 0..count {
                let hi = if i + 1 == count { signal.len() } else { (i + 1) * degree };
                nets.push(Net {
                    name: format!("net{}", i + 1),
                    kind: NetKind::Signal,
                    terminals: signal[i * degree..hi].to_vec(),
                });
            }
        }
        PinPairing::Aligned => {
            let mut groups: BTreeMap<String, Vec<Terminal>> = BTreeMap::new();
            for term in signal {
                groups.entry(term.pin.clone()).or_default().push(term);
            }
            let mut index = 0;
            for (pin, terms) in groups {
                if terms.len() < 2 {
                    diagnostics.push(Diagnostic::warning(format!(
                        "pin {pin} appears once; left unconnected in aligned pairing"
                    )));
                    continue;
                }
                let count = terms.len() / 2;
                for i in 0..count {
                    let hi = if i + 1 == count { terms.len() } else { (i + 1) * 2 };
                    index += 1;
                    nets.push(Net {
                        name: format!("net{index}"),
                        kind: NetKind::Signal,
                        terminals: terms[i * 2..hi].to_vec(),
                    });
                }
            }
        }
    }

    nets.push(Net {
        name: "VDD".into(),
        kind: NetKind::Power,
        terminals: power,
    });
    nets.push(Net {
        name: "VSS".into(),
        kind: NetKind::Ground,
        terminals: ground,
    });
    (nets, diagnostics)
}

/// A prerouted power shape (rail or strap) bound to its net by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerShape {
    /// Tech layer index.
    pub layer: usize,
    pub net: String,
    pub rect: Rect,
}

/// Draw the horizontal power rails on the lowest routing layer: one band
/// per site-row boundary, alternating VSS (row 0, ...) and VDD, matching
/// the rail pattern standard cells assume. Bands extend one minimum width
/// above and below the boundary and are clipped to the die.
pub fn preroute_power(tech: &TechRules, die: &Rect, rows: u32) -> Vec<PowerShape> {
    let Some(&rail_layer) = tech.routing_layers().first() else {
        return Vec::new();
    };
    let half = tech.layer(rail_layer).min_width;
    let mut rails = Vec::new();
    for r in 0..=rows {
        let y = r as i64 * tech.site_row_height;
        let (y_lo, y_hi) = ((y - half).max(die.y_lo), (y + half).min(die.y_hi));
        if y_lo >= y_hi {
            continue;
        }
        rails.push(PowerShape {
            layer: rail_layer,
            net: if r % 2 == 0 { "VSS".into() } else { "VDD".into() },
            rect: Rect::new(die.x_lo, y_lo, die.x_hi, y_hi),
        });
    }
    rails
}

/// Straps for one window layer given the two raw draws for it. Exposed for
/// direct testing; [`generate_straps`] supplies the draws.
pub(crate) fn straps_for_layer(
    rule: &LayerRule,
    layer: usize,
    die: &Rect,
    density: f64,
    u_width: u64,
    u_step: u64,
) -> (Vec<PowerShape>, Option<Diagnostic>) {
    let width = 2 * (density * u_width as f64).round() as i64;
    if width <= 0 {
        return (Vec::new(), None);
    }
    let mut step = 20 * u_step as i64;
    let mut warning = None;
    if step < width + rule.min_spacing {
        step = width + rule.min_spacing;
        warning = Some(Diagnostic::warning(format!(
            "strap step on {} below width plus spacing; clamped to {}",
            rule.name, step
        )));
    }
    let mut straps = Vec::new();
    let extent = match rule.direction {
        Direction::Horizontal => die.height(),
        Direction::Vertical => die.width(),
        Direction::None => return (straps, warning),
    };
    let mut k = 0i64;
    while k * step + width <= extent {
        let lo = k * step;
        let rect = match rule.direction {
            Direction::Horizontal => {
                Rect::new(die.x_lo, die.y_lo + lo, die.x_hi, die.y_lo + lo + width)
            }
            _ => Rect::new(die.x_lo + lo, die.y_lo, die.x_lo + lo + width, die.y_hi),
        };
        straps.push(PowerShape {
            layer,
            net: if k % 2 == 0 { "VDD".into() } else { "VSS".into() },
            rect,
        });
        k += 1;
    }
    (straps, warning)
}

/// Randomized power straps over every window layer, in the layer's
/// preferred direction, alternating VDD/VSS. Width scales with the strap
/// density knob (a density of zero disables straps entirely); the step is
/// clamped so adjacent straps keep the layer's minimum spacing. Exactly
/// two draws are consumed per window layer regardless of outcome, so the
/// stream position never depends on the density.
pub fn generate_straps(
    tech: &TechRules,
    window: &[usize],
    die: &Rect,
    density: f64,
    stream: &mut Stream,
) -> (Vec<PowerShape>, Vec<Diagnostic>) {
    let mut straps = Vec::new();
    let mut diagnostics = Vec::new();
    for &layer in window {
        let u_width = stream.below(100);
        let u_step = stream.below(100);
        let (mut shapes, warning) =
            straps_for_layer(tech.layer(layer), layer, die, density, u_width, u_step);
        straps.append(&mut shapes);
        diagnostics.extend(warning);
    }
    (straps, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abutment::PlacedPinShape;
    use crate::library::LayerKind;
    use crate::route::rng::StreamPurpose;

    fn pin_shape(instance: &str, pin: &str, kind: PinKind) -> PlacedPinShape {
        PlacedPinShape {
            instance: instance.into(),
            cell: "C".into(),
            pin: pin.into(),
            kind,
            layer: "M1".into(),
            mask: 0,
            rect: Rect::new(0, 0, 10, 10),
        }
    }

    fn placement(pins: Vec<PlacedPinShape>) -> Placement {
        Placement {
            pins,
            obstructions: Vec::new(),
        }
    }

    fn stream() -> Stream {
        Stream::new(1, StreamPurpose::PinAssign, "t")
    }

    #[test]
    fn random_pairing_partitions_all_signal_terminals() {
        let p = placement(
            (1..=6)
                .map(|i| pin_shape(&format!("U{i}"), "A", PinKind::Signal))
                .collect(),
        );
        let (nets, diags) = assign_pin_nets(&p, PinPairing::Random, 2, &mut stream());
        assert!(diags.is_empty());
        let signal: Vec<&Net> = nets.iter().filter(|n| n.kind == NetKind::Signal).collect();
        assert_eq!(signal.len(), 3);
        assert_eq!(
            signal.iter().map(|n| n.name.as_str()).collect::<Vec<_>>(),
            ["net1", "net2", "net3"]
        );
        let mut all: Vec<String> = signal
            .iter()
            .flat_map(|n| n.terminals.iter().map(|t| t.instance.clone()))
            .collect();
        all.sort();
        assert_eq!(all, ["U1", "U2", "U3", "U4", "U5", "U6"]);
        // same stream key reproduces the same partition
        let (again, _) = assign_pin_nets(&p, PinPairing::Random, 2, &mut stream());
        assert_eq!(nets, again);
    }

    #[test]
    fn last_net_absorbs_the_remainder() {
        let p = placement(
            (1..=7)
                .map(|i| pin_shape(&format!("U{i}"), "A", PinKind::Signal))
                .collect(),
        );
        let (nets, _) = assign_pin_nets(&p, PinPairing::Random, 3, &mut stream());
        let signal: Vec<&Net> = nets.iter().filter(|n| n.kind == NetKind::Signal).collect();
        assert_eq!(signal.len(), 2);
        assert_eq!(signal[0].terminals.len(), 3);
        assert_eq!(signal[1].terminals.len(), 4); // 3 + the leftover seventh
    }

    #[test]
    fn lone_terminal_warns_and_connects_nothing() {
        let p = placement(vec![pin_shape("U1", "A", PinKind::Signal)]);
        let (nets, diags) = assign_pin_nets(&p, PinPairing::Random, 2, &mut stream());
        assert!(nets.iter().all(|n| n.kind != NetKind::Signal));
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("none connected"));
    }

    #[test]
    fn power_pins_collect_on_the_rail_nets() {
        let p = placement(vec![
            pin_shape("U1", "VDD", PinKind::Power),
            pin_shape("U1", "VSS", PinKind::Ground),
            pin_shape("U2", "VDD", PinKind::Power),
        ]);
        let (nets, _) = assign_pin_nets(&p, PinPairing::Random, 2, &mut stream());
        let vdd = nets.iter().find(|n| n.name == "VDD").unwrap();
        let vss = nets.iter().find(|n| n.name == "VSS").unwrap();
        assert_eq!(vdd.kind, NetKind::Power);
        assert_eq!(vdd.terminals.len(), 2);
        assert_eq!(vss.kind, NetKind::Ground);
        assert_eq!(vss.terminals.len(), 1);
    }

    #[test]
    fn rail_nets_exist_even_without_power_pins() {
        let p = placement(vec![
            pin_shape("U1", "A", PinKind::Signal),
            pin_shape("U2", "A", PinKind::Signal),
        ]);
        let (nets, _) = assign_pin_nets(&p, PinPairing::Random, 2, &mut stream());
        assert!(nets.iter().any(|n| n.name == "VDD" && n.terminals.is_empty()));
        assert!(nets.iter().any(|n| n.name == "VSS" && n.terminals.is_empty()));
    }

    #[test]
    fn aligned_pairing_groups_by_pin_name() {
        // A appears 3 times (net of 3), Y twice (net of 2); no randomness
        let p = placement(vec![
            pin_shape("U1", "A", PinKind::Signal),
            pin_shape("U1", "Y", PinKind::Signal),
            pin_shape("U2", "A", PinKind::Signal),
            pin_shape("U2", "Y", PinKind::Signal),
            pin_shape("U3", "A", PinKind::Signal),
        ]);
        let (nets, diags) = assign_pin_nets(&p, PinPairing::Aligned, 2, &mut stream());
        assert!(diags.is_empty());
        let signal: Vec<&Net> = nets.iter().filter(|n| n.kind == NetKind::Signal).collect();
        assert_eq!(signal.len(), 2);
        assert_eq!(signal[0].name, "net1");
        assert!(signal[0].terminals.iter().all(|t| t.pin == "A"));
        assert_eq!(signal[0].terminals.len(), 3);
        assert_eq!(signal[1].name, "net2");
        assert!(signal[1].terminals.iter().all(|t| t.pin == "Y"));
        // canonical instance order inside each group
        assert_eq!(signal[0].terminals[0].instance, "U1");
        assert_eq!(signal[0].terminals[1].instance, "U2");
    }

    #[test]
    fn aligned_singleton_pin_warns() {
        let p = placement(vec![
            pin_shape("U1", "A", PinKind::Signal),
            pin_shape("U1", "B", PinKind::Signal),
            pin_shape("U2", "A", PinKind::Signal),
        ]);
        let (nets, diags) = assign_pin_nets(&p, PinPairing::Aligned, 2, &mut stream());
        let signal: Vec<&Net> = nets.iter().filter(|n| n.kind == NetKind::Signal).collect();
        assert_eq!(signal.len(), 1);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("pin B"));
    }

    fn toy_tech() -> TechRules {
        let layer = |name: &str, kind, dir, pitch, width, spacing| LayerRule {
            name: name.into(),
            kind,
            direction: dir,
            pitch,
            min_width: width,
            min_spacing: spacing,
            same_net_spacing: spacing,
            dp_spacing: 0,
            via_enclosure: 10,
            min_enclosed_width: width,
        };
        TechRules {
            units_per_micron: 1000,
            site_row_height: 1800,
            layers: vec![
                layer("M1", LayerKind::Routing, Direction::Horizontal, 200, 60, 60),
                layer("V1", LayerKind::Cut, Direction::None, 0, 60, 80),
                layer("M2", LayerKind::Routing, Direction::Horizontal, 200, 100, 100),
                layer("V2", LayerKind::Cut, Direction::None, 0, 60, 80),
                layer("M3", LayerKind::Routing, Direction::Vertical, 200, 100, 100),
            ],
        }
    }

    #[test]
    fn rails_alternate_vss_vdd_from_the_bottom() {
        let tech = toy_tech();
        let die = Rect::new(0, 0, 800, 3600);
        let rails = preroute_power(&tech, &die, 2);
        assert_eq!(rails.len(), 3);
        assert_eq!(rails[0].net, "VSS");
        assert_eq!(rails[0].rect, Rect::new(0, 0, 800, 60)); // clipped at die bottom
        assert_eq!(rails[1].net, "VDD");
        assert_eq!(rails[1].rect, Rect::new(0, 1740, 800, 1860));
        assert_eq!(rails[2].net, "VSS");
        assert_eq!(rails[2].rect, Rect::new(0, 3540, 800, 3600));
        assert!(rails.iter().all(|r| r.layer == 0));
    }

    #[test]
    fn straps_alternate_and_respect_the_step() {
        let tech = toy_tech();
        let die = Rect::new(0, 0, 2000, 1000);
        // width 2*round(1.0*30)=60, step 20*20=400; horizontal layer
        let (straps, warn) = straps_for_layer(tech.layer(2), 2, &die, 1.0, 30, 20);
        assert!(warn.is_none());
        assert_eq!(straps.len(), 3); // bands at 0, 400, 800; 1260 > 1000 ends it
        let rects: Vec<Rect> = straps.iter().map(|s| s.rect).collect();
        assert_eq!(rects[0], Rect::new(0, 0, 2000, 60));
        assert_eq!(rects[1], Rect::new(0, 400, 2000, 460));
        assert_eq!(rects[2], Rect::new(0, 800, 2000, 860));
        assert_eq!(straps[0].net, "VDD");
        assert_eq!(straps[1].net, "VSS");
        assert_eq!(straps[2].net, "VDD");
    }

    #[test]
    fn strap_width_scales_with_density_and_zero_disables() {
        let tech = toy_tech();
        let die = Rect::new(0, 0, 2000, 1000);
        let (straps, _) = straps_for_layer(tech.layer(2), 2, &die, 0.5, 30, 20);
        assert_eq!(straps[0].rect.height(), 30); // 2 * round(0.5 * 30)
        let (none, warn) = straps_for_layer(tech.layer(2), 2, &die, 0.0, 99, 1);
        assert!(none.is_empty() && warn.is_none());
    }

    #[test]
    fn tight_step_is_clamped_with_a_warning() {
        let tech = toy_tech();
        let die = Rect::new(0, 0, 2000, 1000);
        // width 2*50=100, raw step 20 < 100+100 → clamped to 200
        let (straps, warn) = straps_for_layer(tech.layer(2), 2, &die, 1.0, 50, 1);
        assert!(warn.unwrap().message.contains("clamped to 200"));
        assert_eq!(straps[0].rect, Rect::new(0, 0, 2000, 100));
        assert_eq!(straps[1].rect, Rect::new(0, 200, 2000, 300));
        // 100-unit gap between consecutive straps = min spacing exactly
    }

    #[test]
    fn vertical_layer_straps_run_vertically() {
        let tech = toy_tech();
        let die = Rect::new(0, 0, 1000, 2000);
        let (straps, _) = straps_for_layer(tech.layer(4), 4, &die, 1.0, 30, 20);
        assert_eq!(straps[0].rect, Rect::new(0, 0, 60, 2000));
        assert_eq!(straps[1].rect, Rect::new(400, 0, 460, 2000));
    }

    #[test]
    fn strap_generation_consumes_two_draws_per_layer() {
        let tech = toy_tech();
        let die = Rect::new(0, 0, 2000, 1000);
        let mut s1 = Stream::new(9, StreamPurpose::Straps, "t");
        let (a, _) = generate_straps(&tech, &[2, 4], &die, 1.0, &mut s1);
        // replaying the stream by hand must give the same geometry
        let mut s2 = Stream::new(9, StreamPurpose::Straps, "t");
        let mut expect = Vec::new();
        for &layer in &[2usize, 4] {
            let (u_w, u_s) = (s2.below(100), s2.below(100));
            let (mut shapes, _) = straps_for_layer(tech.layer(layer), layer, &die, 1.0, u_w, u_s);
            expect.append(&mut shapes);
        }
        assert_eq!(a, expect);
        // density zero consumes the same number of draws
        let mut s3 = Stream::new(9, StreamPurpose::Straps, "t");
        let _ = generate_straps(&tech, &[2, 4], &die, 0.0, &mut s3);
        assert_eq!(s3.next_u64(), s1.next_u64());
    }
}
