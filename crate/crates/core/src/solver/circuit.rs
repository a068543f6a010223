//! Tseitin circuits and two's-complement bitvectors over a SAT solver.

use batsat::{lbool, BasicSolver, Lit, SolverInterface};
use std::collections::HashMap;

/// A little-endian bitvector.
pub type Bv = Vec<Lit>;

pub struct Circuit {
    pub sat: BasicSolver,
    t: Lit,
    ands: HashMap<(Lit, Lit), Lit>,
    xors: HashMap<(Lit, Lit), Lit>,
}

impl Circuit {
    pub fn new(sat: BasicSolver) -> Circuit {
        let mut sat = sat;
        let t = Lit::new(sat.new_var_default(), true);
        sat.add_clause_reuse(&mut vec![t]);
        Circuit {
            sat,
            t,
            ands: HashMap::new(),
            xors: HashMap::new(),
        }
    }

    pub fn tt(&self) -> Lit {
        self.t
    }

    pub fn ff(&self) -> Lit {
        !self.t
    }

    pub fn constant(&self, b: bool) -> Lit {
        if b {
            self.t
        } else {
            !self.t
        }
    }

    pub fn fresh(&mut self) -> Lit {
        Lit::new(self.sat.new_var_default(), true)
    }

    pub fn clause(&mut self, lits: &[Lit]) {
        if lits.contains(&self.t) {
            return;
        }
        let mut c: Vec<Lit> = lits.iter().copied().filter(|&l| l != !self.t).collect();
        self.sat.add_clause_reuse(&mut c);
    }

    pub fn assert(&mut self, l: Lit) {
        self.clause(&[l]);
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let (t, f) = (self.t, !self.t);
        if a == f || b == f || a == !b {
            return f;
        }
        if a == t || a == b {
            return b;
        }
        if b == t {
            return a;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&g) = self.ands.get(&key) {
            return g;
        }
        let g = self.fresh();
        self.sat.add_clause_reuse(&mut vec![!g, a]);
        self.sat.add_clause_reuse(&mut vec![!g, b]);
        self.sat.add_clause_reuse(&mut vec![g, !a, !b]);
        self.ands.insert(key, g);
        g
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn implies(&mut self, a: Lit, b: Lit) -> Lit {
        self.or(!a, b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let (t, f) = (self.t, !self.t);
        if a == f {
            return b;
        }
        if b == f {
            return a;
        }
        if a == t {
            return !b;
        }
        if b == t {
            return !a;
        }
        if a == b {
            return f;
        }
        if a == !b {
            return t;
        }
        // Normalize signs so that equal gates share one variable.
        let flip = a.sign() != b.sign();
        let (a, b) = (if a.sign() { a } else { !a }, if b.sign() { b } else { !b });
        let key = if a < b { (a, b) } else { (b, a) };
        let g = match self.xors.get(&key) {
            Some(&g) => g,
            None => {
                let g = self.fresh();
                self.sat.add_clause_reuse(&mut vec![!g, a, b]);
                self.sat.add_clause_reuse(&mut vec![!g, !a, !b]);
                self.sat.add_clause_reuse(&mut vec![g, !a, b]);
                self.sat.add_clause_reuse(&mut vec![g, a, !b]);
                self.xors.insert(key, g);
                g
            }
        };
        if flip {
            !g
        } else {
            g
        }
    }

    pub fn iff(&mut self, a: Lit, b: Lit) -> Lit {
        !self.xor(a, b)
    }

    pub fn ite(&mut self, c: Lit, a: Lit, b: Lit) -> Lit {
        if c == self.t || a == b {
            return a;
        }
        if c == !self.t {
            return b;
        }
        let x = self.and(c, a);
        let y = self.and(!c, b);
        self.or(x, y)
    }

    pub fn and_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        let mut acc = self.t;
        for l in lits {
            acc = self.and(acc, l);
            if acc == !self.t {
                break;
            }
        }
        acc
    }

    pub fn or_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        let mut acc = !self.t;
        for l in lits {
            acc = self.or(acc, l);
            if acc == self.t {
                break;
            }
        }
        acc
    }

    /// `ge[k]` holds when at least `k` of `lits` hold, for `k <= max`.
    pub fn at_least(&mut self, lits: &[Lit], max: usize) -> Vec<Lit> {
        let mut ge = vec![self.ff(); max + 1];
        ge[0] = self.t;
        for &l in lits {
            for k in (1..=max).rev() {
                let inc = self.and(ge[k - 1], l);
                ge[k] = self.or(ge[k], inc);
            }
        }
        ge
    }

    pub fn bv_const(&self, w: u32, v: i64) -> Bv {
        (0..w).map(|i| self.constant((v >> i) & 1 == 1)).collect()
    }

    pub fn bv_fresh(&mut self, w: u32) -> Bv {
        (0..w).map(|_| self.fresh()).collect()
    }

    pub fn bv_eq(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let bits: Vec<Lit> = a.iter().zip(b).map(|(&x, &y)| self.iff(x, y)).collect();
        self.and_all(bits)
    }

    pub fn bv_ite(&mut self, c: Lit, a: &[Lit], b: &[Lit]) -> Bv {
        a.iter().zip(b).map(|(&x, &y)| self.ite(c, x, y)).collect()
    }

    fn full_add(&mut self, a: Lit, b: Lit, c: Lit) -> (Lit, Lit) {
        let ab = self.xor(a, b);
        let s = self.xor(ab, c);
        let x = self.and(a, b);
        let y = self.and(ab, c);
        (s, self.or(x, y))
    }

    fn add_carry(&mut self, a: &[Lit], b: &[Lit], mut carry: Lit) -> (Bv, Lit) {
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let (s, c) = self.full_add(x, y, carry);
            out.push(s);
            carry = c;
        }
        (out, carry)
    }

    pub fn bv_add(&mut self, a: &[Lit], b: &[Lit]) -> Bv {
        let f = self.ff();
        self.add_carry(a, b, f).0
    }

    pub fn bv_sub(&mut self, a: &[Lit], b: &[Lit]) -> Bv {
        let nb: Bv = b.iter().map(|&l| !l).collect();
        let t = self.tt();
        self.add_carry(a, &nb, t).0
    }

    pub fn bv_neg(&mut self, a: &[Lit]) -> Bv {
        let zero = self.bv_const(a.len() as u32, 0);
        self.bv_sub(&zero, a)
    }

    /// Product truncated to the operand width.
    pub fn bv_mul(&mut self, a: &[Lit], b: &[Lit]) -> Bv {
        let w = a.len();
        let mut acc = self.bv_const(w as u32, 0);
        for i in 0..w {
            let mut row = vec![self.ff(); i];
            for j in 0..w - i {
                let p = self.and(a[j], b[i]);
                row.push(p);
            }
            acc = self.bv_add(&acc, &row);
        }
        acc
    }

    /// Unsigned `a < b`.
    pub fn bv_ult(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let mut lt = self.ff();
        for (&x, &y) in a.iter().zip(b) {
            // From the least significant bit up; higher bits decide.
            let bit_lt = self.and(!x, y);
            let same = self.iff(x, y);
            let keep = self.and(same, lt);
            lt = self.or(bit_lt, keep);
        }
        lt
    }

    /// Signed `a < b`.
    pub fn bv_slt(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let flip = |v: &[Lit]| {
            let mut v = v.to_vec();
            let n = v.len() - 1;
            v[n] = !v[n];
            v
        };
        self.bv_ult(&flip(a), &flip(b))
    }

    /// Truncating signed division with `x / 0 = 0`.
    pub fn bv_sdiv(&mut self, a: &[Lit], b: &[Lit]) -> Bv {
        let w = a.len();
        let (sa, sb) = (a[w - 1], b[w - 1]);
        let na = self.bv_neg(a);
        let nb = self.bv_neg(b);
        let ua = self.bv_ite(sa, &na, a);
        let ub = self.bv_ite(sb, &nb, b);
        // ua = q * ub + r with r < ub, computed without overflow in 2w bits.
        let q = self.bv_fresh(w as u32);
        let r = self.bv_fresh(w as u32);
        let ext = |c: &Circuit, v: &[Lit]| {
            let mut v = v.to_vec();
            v.resize(2 * w, c.ff());
            v
        };
        let (q2, ub2, r2, ua2) = (ext(self, &q), ext(self, &ub), ext(self, &r), ext(self, &ua));
        let prod = self.bv_mul(&q2, &ub2);
        let sum = self.bv_add(&prod, &r2);
        let zero = self.bv_const(w as u32, 0);
        let b_zero = self.bv_eq(&ub, &zero);
        let exact = self.bv_eq(&sum, &ua2);
        let rem_ok = self.bv_ult(&r, &ub);
        let ok = self.and(exact, rem_ok);
        let ok = self.or(b_zero, ok);
        self.assert(ok);
        let q_zero = self.bv_eq(&q, &zero);
        let r_zero = self.bv_eq(&r, &zero);
        let pinned = self.and(q_zero, r_zero);
        let unused = self.implies(b_zero, pinned);
        self.assert(unused);
        let neg = self.xor(sa, sb);
        let nq = self.bv_neg(&q);
        let signed = self.bv_ite(neg, &nq, &q);
        self.bv_ite(b_zero, &zero, &signed)
    }

    pub fn value(&self, l: Lit) -> bool {
        self.sat.value_lit(l) == lbool::TRUE
    }

    /// Signed value of a bitvector in the last model.
    pub fn bv_value(&self, v: &[Lit]) -> i64 {
        let w = v.len();
        let mut x: i64 = 0;
        for (i, &l) in v.iter().enumerate() {
            if self.value(l) {
                x |= 1 << i;
            }
        }
        if w > 0 && x >> (w - 1) & 1 == 1 {
            x -= 1 << w;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::Bitwidth;

    /// Every operator against the reference arithmetic, for all 3-bit pairs.
    #[test]
    fn bitvector_ops_match_reference() {
        let w = Bitwidth::new(3).unwrap();
        for x in w.values() {
            for y in w.values() {
                let mut c = Circuit::new(BasicSolver::default());
                let a = c.bv_fresh(3);
                let b = c.bv_fresh(3);
                let ca = c.bv_const(3, x);
                let cb = c.bv_const(3, y);
                let ea = c.bv_eq(&a, &ca);
                let eb = c.bv_eq(&b, &cb);
                c.assert(ea);
                c.assert(eb);
                let sum = c.bv_add(&a, &b);
                let diff = c.bv_sub(&a, &b);
                let prod = c.bv_mul(&a, &b);
                let quot = c.bv_sdiv(&a, &b);
                let neg = c.bv_neg(&a);
                let lt = c.bv_slt(&a, &b);
                assert_eq!(c.sat.solve_limited(&[]), lbool::TRUE);
                assert_eq!(c.bv_value(&sum), w.add(x, y));
                assert_eq!(c.bv_value(&diff), w.sub(x, y));
                assert_eq!(c.bv_value(&prod), w.mul(x, y));
                assert_eq!(c.bv_value(&quot), w.div(x, y), "{x} / {y}");
                assert_eq!(c.bv_value(&neg), w.neg(x));
                assert_eq!(c.value(lt), x < y);
            }
        }
    }

    #[test]
    fn counting() {
        let mut c = Circuit::new(BasicSolver::default());
        let xs: Vec<Lit> = (0..4).map(|_| c.fresh()).collect();
        let ge = c.at_least(&xs, 3);
        c.assert(ge[2]);
        c.assert(!ge[3]);
        c.assert(xs[0]);
        c.assert(xs[1]);
        assert_eq!(c.sat.solve_limited(&[]), lbool::TRUE);
        assert!(!c.value(xs[2]) && !c.value(xs[3]));
    }
}
