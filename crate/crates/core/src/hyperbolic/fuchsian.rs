//! The genus-two surface group generated by side pairings of the regular
//! octagon with interior angles pi/4, centred at `i`.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::{FRAC_PI_8, SQRT_2};
use std::sync::OnceLock;

use super::element::{distance_key_to_i, hyperbolic_distance, GroupElement};
use crate::error::{Error, Result};

/// Bound on left-multiplication steps taken by [`FuchsianGroup::reduce`].
pub const MAX_REDUCTION_STEPS: usize = 10_000;

/// Radius parameter of the default shell: distances up to this value between
/// reduced points are computed exactly by the shell search.
pub const SHELL_REACH: f64 = 3.2;

/// A discrete cocompact subgroup of PSL(2,R) given by side pairings of a
/// Dirichlet domain centred at `i`.
#[derive(Debug)]
pub struct FuchsianGroup {
    generators: Vec<GroupElement>,
    relation: Vec<usize>,
    circumradius: f64,
    shell: OnceLock<Vec<ShellElement>>,
}

/// A deck transformation together with the displacement `d(i, g i)`.
#[derive(Clone, Copy, Debug)]
pub struct ShellElement {
    pub element: GroupElement,
    pub displacement: f64,
}

impl FuchsianGroup {
    /// The regular-octagon group. Generator `k` translates along the axis
    /// at angle `k pi / 4` through the centre; `k + 4` is the inverse of `k`.
    pub fn octagon() -> Self {
        let a = 1.0 + SQRT_2;
        let b = (2.0 + 2.0 * SQRT_2).sqrt();
        let g0 = GroupElement::new(a, b, b, a);
        let generators = (0..8)
            .map(|k| {
                let r = GroupElement::rotation(k as f64 * FRAC_PI_8);
                r.mul_raw(&g0).mul_raw(&r.inverse()).renormalized()
            })
            .collect();
        // g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3
        let relation = vec![0, 5, 2, 7, 4, 1, 6, 3];
        FuchsianGroup {
            generators,
            relation,
            circumradius: (a * a).acosh(),
            shell: OnceLock::new(),
        }
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn generator(&self, k: usize) -> GroupElement {
        self.generators[k % self.generators.len()]
    }

    /// Index of the inverse generator.
    pub fn inverse_index(&self, k: usize) -> usize {
        (k + self.generators.len() / 2) % self.generators.len()
    }

    pub fn relation(&self) -> &[usize] {
        &self.relation
    }

    /// Distance from the centre to a vertex of the fundamental domain.
    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    /// Product of the relation word; equals the identity up to sign.
    pub fn relation_product(&self) -> GroupElement {
        self.word(&self.relation)
    }

    pub fn verify_relation(&self, tol: f64) -> bool {
        self.relation_product()
            .approx_eq(&GroupElement::IDENTITY, tol)
    }

    /// Product of generators in the given order.
    pub fn word(&self, word: &[usize]) -> GroupElement {
        word.iter().fold(GroupElement::IDENTITY, |acc, &k| {
            acc.mul_raw(&self.generator(k)).renormalized()
        })
    }

    /// Left-multiplies `g` by generators until its base point lies in the
    /// closed fundamental octagon. Returns the reduced element and the deck
    /// transformation `gamma` with `reduced = gamma * g`.
    pub fn reduce(&self, g: &GroupElement) -> Result<(GroupElement, GroupElement)> {
        let mut cur = *g;
        let mut deck = GroupElement::IDENTITY;
        let mut z = cur.base_point();
        let mut key = distance_key_to_i(z);
        for _ in 0..MAX_REDUCTION_STEPS {
            let mut best = key;
            let mut best_k = usize::MAX;
            for (k, gen) in self.generators.iter().enumerate() {
                let kz = distance_key_to_i(gen.act(z));
                if kz < best {
                    best = kz;
                    best_k = k;
                }
            }
            if best_k == usize::MAX || best > key - 1e-12 * (1.0 + key) {
                return Ok((cur, deck));
            }
            let gen = self.generators[best_k];
            cur = gen.mul_raw(&cur).renormalized();
            deck = gen.mul_raw(&deck).renormalized();
            z = cur.base_point();
            key = distance_key_to_i(z);
            if !key.is_finite() {
                return Err(Error::NonTermination(0));
            }
        }
        Err(Error::NonTermination(MAX_REDUCTION_STEPS))
    }

    /// True when the base point of `g` is in the closed fundamental domain
    /// (up to the reduction tolerance).
    pub fn is_reduced(&self, g: &GroupElement) -> bool {
        let z = g.base_point();
        let key = distance_key_to_i(z);
        self.generators
            .iter()
            .all(|gen| distance_key_to_i(gen.act(z)) > key - 1e-12 * (1.0 + key))
    }

    /// All group elements `gamma` with `d(i, gamma i) <= radius`, sorted by
    /// that displacement.
    ///
    /// Breadth-first search over generator words; the set of domain tiles
    /// within a ball is connected through shared sides, so the search
    /// is complete when it explores tiles up to `radius + circumradius`.
    pub fn elements_within(&self, radius: f64) -> Vec<ShellElement> {
        let explore = radius + self.circumradius;
        let quant = |z: (f64, f64)| ((z.0 * 1e7).round() as i64, (z.1.ln() * 1e7).round() as i64);
        let mut seen: HashMap<(i64, i64), ()> = HashMap::new();
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(quant((0.0, 1.0)), ());
        queue.push_back(GroupElement::IDENTITY);
        while let Some(g) = queue.pop_front() {
            let disp = hyperbolic_distance((0.0, 1.0), g.base_point());
            if disp <= radius {
                out.push(ShellElement {
                    element: g,
                    displacement: disp,
                });
            }
            for gen in &self.generators {
                let h = g.mul_raw(gen).renormalized();
                let z = h.base_point();
                if hyperbolic_distance((0.0, 1.0), z) > explore {
                    continue;
                }
                if seen.insert(quant(z), ()).is_none() {
                    queue.push_back(h);
                }
            }
        }
        out.sort_by(|a, b| a.displacement.total_cmp(&b.displacement));
        out
    }

    /// Cached shell used for surface distances between reduced points.
    pub fn shell(&self) -> &[ShellElement] {
        self.shell.get_or_init(|| {
            self.elements_within(2.0 * self.circumradius + SQRT_2 * SHELL_REACH)
        })
    }

    /// Distance on the quotient between reduced elements `p` and `q`:
    /// the minimum over deck transformations of `|log(p^-1 gamma q)|`.
    ///
    /// Exact for distances up to [`SHELL_REACH`]; beyond that it is an
    /// upper bound.
    pub fn quotient_distance(&self, p: &GroupElement, q: &GroupElement) -> f64 {
        self.nearest_lift(p, q).0
    }

    /// Like [`FuchsianGroup::quotient_distance`] but also returns the deck
    /// transformation realising the minimum.
    pub fn nearest_lift(&self, p: &GroupElement, q: &GroupElement) -> (f64, GroupElement) {
        let pz = p.base_point();
        let qz = q.base_point();
        let rp = hyperbolic_distance((0.0, 1.0), pz);
        let rq = hyperbolic_distance((0.0, 1.0), qz);
        let pinv = p.inverse();
        let mut best = f64::INFINITY;
        let mut best_g = GroupElement::IDENTITY;
        for s in self.shell() {
            if s.displacement - rp - rq > SQRT_2 * best {
                break;
            }
            let gz = s.element.act(qz);
            if hyperbolic_distance(pz, gz) > SQRT_2 * best {
                continue;
            }
            let m = pinv.mul_raw(&s.element).mul_raw(q).renormalized();
            let d = m.log_norm();
            if d < best {
                best = d;
                best_g = s.element;
            }
        }
        (best, best_g)
    }
}

static OCTAGON: OnceLock<FuchsianGroup> = OnceLock::new();

/// Shared instance of the octagon group with its cached shell.
pub fn surface_group() -> &'static FuchsianGroup {
    OCTAGON.get_or_init(FuchsianGroup::octagon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opposite_generators_are_inverse() {
        let g = FuchsianGroup::octagon();
        for k in 0..4 {
            let p = g.generator(k) * g.generator(k + 4);
            assert!(p.approx_eq(&GroupElement::IDENTITY, 1e-12), "k = {k}");
        }
    }

    #[test]
    fn shell_contains_generators_and_identity() {
        let g = surface_group();
        let shell = g.elements_within(3.1);
        assert!(shell[0].displacement < 1e-12);
        // identity plus eight generators at distance ~3.057
        assert_eq!(shell.len(), 9);
    }
}
