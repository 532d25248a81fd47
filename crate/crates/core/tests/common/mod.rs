//! Generators and reference oracles shared by the integration tests.
//!
//! The oracles work on plain integers and never call into the compiler, so
//! they can be compared against the interpreter and the emitted layouts.
#![allow(dead_code)]

use std::fmt::Write;
use std::path::PathBuf;

use rand::Rng;
use spadelite::bits::Bits;
use spadelite::diagnostics::SourceFiles;
use spadelite::driver::{compile, single_file, Compilation};
use spadelite::interp::{Design, Simulator};

pub fn build(src: &str) -> Compilation {
    compile(&single_file(src)).unwrap_or_else(|f| panic!("{:?}\n{src}", f.errors))
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every `.spade` file of the corpus, sorted by name.
pub fn corpus_files() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "spade").then(|| {
                let name = p.file_name().unwrap().to_string_lossy().into_owned();
                (name, std::fs::read_to_string(&p).unwrap())
            })
        })
        .collect();
    out.sort();
    out
}

pub fn sources(files: &[(String, String)]) -> SourceFiles {
    let mut s = SourceFiles::new();
    for (name, content) in files {
        s.add(name.clone(), content.clone());
    }
    s
}

/// Two's complement wrap of `v` to `w` bits.
pub fn wrap(v: i128, w: u32) -> i128 {
    let m = 1i128 << w;
    let r = v.rem_euclid(m);
    if r >= m / 2 {
        r - m
    } else {
        r
    }
}

pub fn rand_int(rng: &mut impl Rng, w: u32) -> i128 {
    let half = 1i128 << (w - 1);
    rng.gen_range(-half..half)
}

/// Blink counter after each edge, by hand.
pub fn blink_oracle(max: i128, release: usize, cycles: usize) -> Vec<i128> {
    let mut counter = 0;
    let mut out = vec![counter];
    for k in 1..=cycles {
        if k > release {
            counter = if counter == max { 0 } else { counter + 1 };
        }
        out.push(counter);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub enum POp {
    Add,
    Sub,
    And,
    Or,
    Xor,
    Min,
}

#[derive(Debug, Clone)]
pub struct PStmt {
    pub op: POp,
    pub lhs: usize,
    pub rhs: usize,
}

/// A feedback-free pipeline over `int<width>` values. Value `i` is input `i`
/// for `i < inputs`, otherwise statement `i - inputs`.
#[derive(Debug, Clone)]
pub struct RandPipeline {
    pub width: u32,
    pub inputs: usize,
    pub depth: usize,
    pub stmts: Vec<PStmt>,
    /// Number of `reg;` markers placed before statement `i`; index
    /// `stmts.len()` holds the markers before the output.
    pub regs_before: Vec<usize>,
}

impl RandPipeline {
    pub fn generate(rng: &mut impl Rng) -> Self {
        let width = rng.gen_range(1..=16);
        let inputs = rng.gen_range(1..=3);
        let depth = rng.gen_range(0..=6);
        let n = rng.gen_range(0..=6);
        let ops = [POp::Add, POp::Sub, POp::And, POp::Or, POp::Xor, POp::Min];
        let stmts = (0..n)
            .map(|i| PStmt {
                op: ops[rng.gen_range(0..ops.len())],
                lhs: rng.gen_range(0..inputs + i),
                rhs: rng.gen_range(0..inputs + i),
            })
            .collect();
        let mut regs_before = vec![0; n + 1];
        for _ in 0..depth {
            regs_before[rng.gen_range(0..=n)] += 1;
        }
        RandPipeline {
            width,
            inputs,
            depth,
            stmts,
            regs_before,
        }
    }

    fn name(&self, i: usize) -> String {
        if i < self.inputs {
            format!("i{i}")
        } else {
            format!("v{}", i - self.inputs)
        }
    }

    pub fn source(&self) -> String {
        let w = self.width;
        let mut s = format!("pipeline({}) p(clk: clock", self.depth);
        for i in 0..self.inputs {
            let _ = write!(s, ", i{i}: int<{w}>");
        }
        let _ = writeln!(s, ") -> int<{w}> {{");
        let regs = |s: &mut String, k: usize| {
            for _ in 0..k {
                s.push_str("    reg;\n");
            }
        };
        for (i, st) in self.stmts.iter().enumerate() {
            regs(&mut s, self.regs_before[i]);
            let (a, b) = (self.name(st.lhs), self.name(st.rhs));
            let e = match st.op {
                POp::Add => format!("trunc({a} + {b})"),
                POp::Sub => format!("trunc({a} - {b})"),
                POp::And => format!("{a} & {b}"),
                POp::Or => format!("{a} | {b}"),
                POp::Xor => format!("{a} ^ {b}"),
                POp::Min => format!("if {a} < {b} {{ {a} }} else {{ {b} }}"),
            };
            let _ = writeln!(s, "        let v{i}: int<{w}> = {e};");
        }
        regs(&mut s, self.regs_before[self.stmts.len()]);
        let _ = writeln!(s, "        {}\n}}", self.name(self.inputs + self.stmts.len() - 1));
        s
    }

    /// Direct combinational evaluation of the body.
    pub fn eval(&self, inputs: &[i128]) -> i128 {
        let w = self.width;
        let mut vals = inputs.to_vec();
        for st in &self.stmts {
            let (a, b) = (vals[st.lhs], vals[st.rhs]);
            vals.push(match st.op {
                POp::Add => wrap(a + b, w),
                POp::Sub => wrap(a - b, w),
                POp::And => a & b,
                POp::Or => a | b,
                POp::Xor => a ^ b,
                POp::Min => a.min(b),
            });
        }
        *vals.last().unwrap()
    }
}

/// Runs `p` on `cycles` random input vectors and compares the output `depth`
/// edges later with the direct evaluation. Returns a description of the first
/// mismatch.
pub fn check_latency(p: &RandPipeline, rng: &mut impl Rng, cycles: usize) -> Result<(), String> {
    let src = p.source();
    let c = compile(&single_file(&src)).map_err(|f| format!("{:?}\n{src}", f.errors))?;
    let d = Design::elaborate(&c.mir, "p").map_err(|e| e.to_string())?;
    let vectors: Vec<Vec<i128>> = (0..cycles)
        .map(|_| (0..p.inputs).map(|_| rand_int(rng, p.width)).collect())
        .collect();
    let mut schedule = vec![];
    for (k, v) in vectors.iter().enumerate() {
        for (i, x) in v.iter().enumerate() {
            schedule.push((k as u64, format!("i{i}"), Bits::from_i128(*x, p.width as usize)));
        }
    }
    let t = spadelite::interp::run(&d, &schedule, (cycles - 1 + p.depth) as u64).map_err(|e| e.to_string())?;
    let out = t.ints("output__").ok_or("no output")?;
    for (k, v) in vectors.iter().enumerate() {
        let expected = p.eval(v);
        if out[k + p.depth] != Some(expected) {
            return Err(format!(
                "cycle {k}: expected {expected}, got {:?}\n{src}",
                out[k + p.depth]
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldTy {
    Bool,
    Int(u32),
}

impl FieldTy {
    pub fn width(self) -> u32 {
        match self {
            FieldTy::Bool => 1,
            FieldTy::Int(w) => w,
        }
    }

    pub fn name(self) -> String {
        match self {
            FieldTy::Bool => "bool".into(),
            FieldTy::Int(w) => format!("int<{w}>"),
        }
    }

    /// Every value of the type, in field-value form.
    pub fn values(self) -> Vec<i128> {
        match self {
            FieldTy::Bool => vec![0, 1],
            FieldTy::Int(w) => (-(1i128 << (w - 1))..(1i128 << (w - 1))).collect(),
        }
    }

    pub fn random(self, rng: &mut impl Rng) -> i128 {
        match self {
            FieldTy::Bool => rng.gen_range(0..2),
            FieldTy::Int(w) => rand_int(rng, w),
        }
    }

    pub fn literal(self, v: i128) -> String {
        match self {
            FieldTy::Bool => (v != 0).to_string(),
            FieldTy::Int(_) => v.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnumShape {
    pub name: String,
    pub variants: Vec<(String, Vec<FieldTy>)>,
}

impl EnumShape {
    /// `max_variants` variants, each with at most `max_payload` payload bits.
    pub fn generate(rng: &mut impl Rng, name: &str, max_variants: usize, max_payload: u32) -> Self {
        let n = rng.gen_range(1..=max_variants);
        let variants = (0..n)
            .map(|i| {
                let mut fields = vec![];
                let mut used = 0;
                for _ in 0..rng.gen_range(0..=3) {
                    let f = if rng.gen_bool(0.3) {
                        FieldTy::Bool
                    } else {
                        FieldTy::Int(rng.gen_range(1..=8))
                    };
                    if used + f.width() <= max_payload {
                        used += f.width();
                        fields.push(f);
                    }
                }
                (format!("V{i}"), fields)
            })
            .collect();
        EnumShape {
            name: name.to_string(),
            variants,
        }
    }

    pub fn source(&self) -> String {
        let vs: Vec<String> = self
            .variants
            .iter()
            .map(|(n, fs)| {
                if fs.is_empty() {
                    n.clone()
                } else {
                    let fields: Vec<String> = fs.iter().enumerate().map(|(i, f)| format!("f{i}: {}", f.name())).collect();
                    format!("{n}{{ {} }}", fields.join(", "))
                }
            })
            .collect();
        format!("enum {} {{ {} }}\n", self.name, vs.join(", "))
    }

    pub fn disc_width(&self) -> u32 {
        let n = self.variants.len() as u32;
        if n <= 1 {
            0
        } else {
            32 - (n - 1).leading_zeros()
        }
    }

    pub fn payload_width(&self) -> u32 {
        self.variants
            .iter()
            .map(|(_, fs)| fs.iter().map(|f| f.width()).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn width(&self) -> u32 {
        self.disc_width() + self.payload_width()
    }

    /// MSB-first bit string: discriminant, `x` padding, then the fields in
    /// order, ending at bit 0.
    pub fn encode(&self, variant: usize, values: &[i128]) -> String {
        let mut s = String::new();
        let dw = self.disc_width();
        for i in (0..dw).rev() {
            s.push(if (variant >> i) & 1 == 1 { '1' } else { '0' });
        }
        let fields = &self.variants[variant].1;
        let used: u32 = fields.iter().map(|f| f.width()).sum();
        for _ in used..self.payload_width() {
            s.push('x');
        }
        for (f, v) in fields.iter().zip(values) {
            let w = f.width();
            let u = v.rem_euclid(1 << w);
            for i in (0..w).rev() {
                s.push(if (u >> i) & 1 == 1 { '1' } else { '0' });
            }
        }
        s
    }

    pub fn expr(&self, variant: usize, values: &[i128]) -> String {
        let (name, fields) = &self.variants[variant];
        if fields.is_empty() {
            format!("{}::{name}", self.name)
        } else {
            let args: Vec<String> = fields.iter().zip(values).map(|(f, v)| f.literal(*v)).collect();
            format!("{}::{name}({})", self.name, args.join(", "))
        }
    }

    pub fn render(&self, variant: usize, values: &[i128]) -> String {
        let (name, fields) = &self.variants[variant];
        if fields.is_empty() {
            name.clone()
        } else {
            let args: Vec<String> = fields.iter().zip(values).map(|(f, v)| f.literal(*v)).collect();
            format!("{name}({})", args.join(", "))
        }
    }

    /// Every (variant, field values) pair.
    pub fn all_values(&self) -> Vec<(usize, Vec<i128>)> {
        let mut out = vec![];
        for (vi, (_, fields)) in self.variants.iter().enumerate() {
            let mut combos: Vec<Vec<i128>> = vec![vec![]];
            for f in fields {
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        f.values().into_iter().map(move |v| {
                            let mut c = c.clone();
                            c.push(v);
                            c
                        })
                    })
                    .collect();
            }
            out.extend(combos.into_iter().map(|c| (vi, c)));
        }
        out
    }
}

/// A concrete enum value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EValue {
    pub variant: usize,
    pub fields: Vec<i128>,
}

#[derive(Debug, Clone)]
pub enum Pat {
    Wild,
    /// Binds the whole scrutinee; never used on enum payload fields.
    Variant(usize, Vec<FieldPat>),
}

#[derive(Debug, Clone, Copy)]
pub enum FieldPat {
    Wild,
    Bind,
    Lit(i128),
}

/// Match arm over a tuple of enum scrutinees (one element for a plain enum).
#[derive(Debug, Clone)]
pub struct Arm {
    pub pats: Vec<Pat>,
}

/// (scrutinee element, field) position of a binding.
type FieldPos = (usize, usize);

/// A `match` over one enum or a 2-tuple of enums, returning
/// `(arm index, first bound int or 0, first bound bool or false)`.
#[derive(Debug, Clone)]
pub struct RandMatch {
    pub shapes: Vec<EnumShape>,
    pub arms: Vec<Arm>,
    /// Common width of all int fields.
    pub int_width: u32,
}

impl RandMatch {
    pub fn generate(rng: &mut impl Rng) -> Self {
        let int_width = rng.gen_range(1..=2);
        let tuple = rng.gen_bool(0.5);
        let n = if tuple { 2 } else { 1 };
        let shapes: Vec<EnumShape> = (0..n)
            .map(|i| {
                let nv = rng.gen_range(1..=3);
                let variants = (0..nv)
                    .map(|v| {
                        let mut fields = vec![];
                        let mut used = 0;
                        for _ in 0..rng.gen_range(0..=2) {
                            let f = if rng.gen_bool(0.4) {
                                FieldTy::Bool
                            } else {
                                FieldTy::Int(int_width)
                            };
                            if used + f.width() <= 4 {
                                used += f.width();
                                fields.push(f);
                            }
                        }
                        (format!("V{v}"), fields)
                    })
                    .collect();
                EnumShape {
                    name: format!("E{i}"),
                    variants,
                }
            })
            .collect();
        let arms = (0..rng.gen_range(1..=4))
            .map(|_| Arm {
                pats: shapes
                    .iter()
                    .map(|s| {
                        if rng.gen_bool(0.25) {
                            return Pat::Wild;
                        }
                        let vi = rng.gen_range(0..s.variants.len());
                        let fps = s.variants[vi]
                            .1
                            .iter()
                            .map(|f| match rng.gen_range(0..3) {
                                0 => FieldPat::Wild,
                                1 => FieldPat::Bind,
                                _ => FieldPat::Lit(f.random(rng)),
                            })
                            .collect();
                        Pat::Variant(vi, fps)
                    })
                    .collect(),
            })
            .collect();
        RandMatch {
            shapes,
            arms,
            int_width,
        }
    }

    /// First bound int and bool of an arm.
    fn bound(&self, arm: &Arm) -> (Option<FieldPos>, Option<FieldPos>) {
        let mut int = None;
        let mut boolean = None;
        for (si, p) in arm.pats.iter().enumerate() {
            if let Pat::Variant(vi, fps) = p {
                for (fi, fp) in fps.iter().enumerate() {
                    if let FieldPat::Bind = fp {
                        match self.shapes[si].variants[*vi].1[fi] {
                            FieldTy::Bool => boolean = boolean.or(Some((si, fi))),
                            FieldTy::Int(_) => int = int.or(Some((si, fi))),
                        }
                    }
                }
            }
        }
        (int, boolean)
    }

    pub fn source(&self) -> String {
        let mut s = String::new();
        for sh in &self.shapes {
            s.push_str(&sh.source());
        }
        let w = self.int_width;
        let scrut_ty = if self.shapes.len() == 1 {
            "E0".to_string()
        } else {
            "(E0, E1)".to_string()
        };
        let _ = writeln!(s, "fn f(a: {scrut_ty}) -> (int<8>, int<{w}>, bool) {{\n    match a {{");
        for (ai, arm) in self.arms.iter().enumerate() {
            let (int, boolean) = self.bound(arm);
            let name = |si: usize, fi: usize| format!("b{si}_{fi}");
            let pats: Vec<String> = arm
                .pats
                .iter()
                .enumerate()
                .map(|(si, p)| match p {
                    Pat::Wild => "_".to_string(),
                    Pat::Variant(vi, fps) => {
                        let sh = &self.shapes[si];
                        let (vn, fields) = &sh.variants[*vi];
                        if fps.is_empty() {
                            return format!("{}::{vn}", sh.name);
                        }
                        let ps: Vec<String> = fps
                            .iter()
                            .enumerate()
                            .map(|(fi, fp)| match fp {
                                FieldPat::Wild => "_".to_string(),
                                FieldPat::Bind => name(si, fi),
                                FieldPat::Lit(v) => fields[fi].literal(*v),
                            })
                            .collect();
                        format!("{}::{vn}({})", sh.name, ps.join(", "))
                    }
                })
                .collect();
            let pat = if pats.len() == 1 {
                pats[0].clone()
            } else {
                format!("({})", pats.join(", "))
            };
            let iv = int.map(|(s, f)| name(s, f)).unwrap_or_else(|| "0".into());
            let bv = boolean.map(|(s, f)| name(s, f)).unwrap_or_else(|| "false".into());
            let _ = writeln!(s, "        {pat} => ({ai}, {iv}, {bv}),");
        }
        let _ = writeln!(s, "        _ => ({}, 0, false),\n    }}\n}}", self.arms.len());
        s
    }

    fn pat_matches(p: &Pat, v: &EValue) -> bool {
        match p {
            Pat::Wild => true,
            Pat::Variant(vi, fps) => {
                *vi == v.variant
                    && fps.iter().zip(&v.fields).all(|(fp, x)| match fp {
                        FieldPat::Lit(l) => l == x,
                        _ => true,
                    })
            }
        }
    }

    /// Direct pattern semantics: the first matching arm wins.
    pub fn eval(&self, vals: &[EValue]) -> (i128, i128, bool) {
        for (ai, arm) in self.arms.iter().enumerate() {
            if arm.pats.iter().zip(vals).all(|(p, v)| Self::pat_matches(p, v)) {
                let (int, boolean) = self.bound(arm);
                let iv = int.map(|(s, f)| vals[s].fields[f]).unwrap_or(0);
                let bv = boolean.map(|(s, f)| vals[s].fields[f] != 0).unwrap_or(false);
                return (ai as i128, iv, bv);
            }
        }
        (self.arms.len() as i128, 0, false)
    }

    /// Every scrutinee value: all variants with all defined payload bits.
    pub fn inputs(&self) -> Vec<Vec<EValue>> {
        let mut out: Vec<Vec<EValue>> = vec![vec![]];
        for sh in &self.shapes {
            let vals: Vec<EValue> = sh
                .all_values()
                .into_iter()
                .map(|(variant, fields)| EValue { variant, fields })
                .collect();
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v.clone());
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// The scrutinee bits: tuple elements MSB first, padding as X.
    pub fn encode(&self, vals: &[EValue]) -> Bits {
        let s: String = self
            .shapes
            .iter()
            .zip(vals)
            .map(|(sh, v)| sh.encode(v.variant, &v.fields))
            .collect();
        Bits::parse(&s).unwrap_or_else(|| Bits::x(0))
    }

    /// Splits an output into `(arm, int, bool)`.
    pub fn decode_output(&self, b: &Bits) -> Option<(i128, i128, bool)> {
        let w = self.int_width as usize;
        let arm = b.slice(w + 1, 8).to_i128()?;
        let int = b.slice(1, w).to_i128()?;
        let boolean = b.slice(0, 1).to_bool()?;
        Some((arm, int, boolean))
    }
}

/// Simulates `f` for every scrutinee and compares with the pattern oracle.
/// `perturb` may rewrite the X padding bits of the input first.
pub fn check_match(m: &RandMatch, mut perturb: impl FnMut(&Bits) -> Bits) -> Result<usize, String> {
    let src = m.source();
    let c = compile(&single_file(&src)).map_err(|f| format!("{:?}\n{src}", f.errors))?;
    let d = Design::elaborate(&c.mir, "f").map_err(|e| e.to_string())?;
    let mut sim = Simulator::new(&d);
    let inputs = m.inputs();
    for vals in &inputs {
        let bits = perturb(&m.encode(vals));
        if bits.width() > 0 {
            sim.set_input("a", bits.clone()).map_err(|e| e.to_string())?;
        }
        sim.settle();
        let out = sim.value("output__").ok_or("no output")?;
        let got = m.decode_output(out);
        let expected = m.eval(vals);
        if got != Some(expected) {
            return Err(format!("input {vals:?} ({bits}): expected {expected:?}, got {out}\n{src}"));
        }
    }
    Ok(inputs.len())
}

/// Replaces every X bit with a random defined bit.
pub fn fill_x(b: &Bits, rng: &mut impl Rng) -> Bits {
    use spadelite::bits::Bit;
    Bits::from_bits_lsb(
        b.bits_lsb()
            .iter()
            .map(|x| match x {
                Bit::X => Bit::from_bool(rng.gen_bool(0.5)),
                other => *other,
            })
            .collect(),
    )
}
