//! Report assembly: a TOML document with fixed key order and every float
//! printed at 17 significant digits, so identical runs produce identical
//! bytes and values round-trip exactly. Wall-clock time never enters the
//! file — it goes to stderr — and the resolved config sits under [config],
//! which makes any report directly reusable as a config file.

use crate::config::{
    ChoiceCfg, DataSource, DomainKind, FitCfg, Inst, OracleCfg, OracleMode, Resolved, StepKind,
    Sub,
};
use wdro::{Order, UnivariateLoss};

pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub struct Report {
    out: String,
}

impl Report {
    pub fn new(sub: Sub) -> Report {
        let mut r = Report { out: String::new() };
        r.string("report", "wdro");
        r.string("subcommand", sub.name());
        r.table("tool");
        r.string("name", "wdro-cli");
        r.string("version", env!("CARGO_PKG_VERSION"));
        r
    }

    pub fn table(&mut self, name: &str) {
        self.out.push_str(&format!("\n[{name}]\n"));
    }

    pub fn array_table(&mut self, name: &str) {
        self.out.push_str(&format!("\n[[{name}]]\n"));
    }

    pub fn string(&mut self, key: &str, v: &str) {
        self.out.push_str(&format!("{key} = \"{}\"\n", esc(v)));
    }

    pub fn float(&mut self, key: &str, v: f64) {
        self.out.push_str(&format!("{key} = {}\n", fmt_float(v)));
    }

    pub fn int(&mut self, key: &str, v: u64) {
        self.out.push_str(&format!("{key} = {v}\n"));
    }

    pub fn boolean(&mut self, key: &str, v: bool) {
        self.out.push_str(&format!("{key} = {v}\n"));
    }

    pub fn float_list(&mut self, key: &str, vs: &[f64]) {
        let items: Vec<String> = vs.iter().map(|v| fmt_float(*v)).collect();
        self.out.push_str(&format!("{key} = [{}]\n", items.join(", ")));
    }

    pub fn int_list(&mut self, key: &str, vs: &[u64]) {
        let items: Vec<String> = vs.iter().map(u64::to_string).collect();
        self.out.push_str(&format!("{key} = [{}]\n", items.join(", ")));
    }

    pub fn int_list_list(&mut self, key: &str, vs: &[Vec<usize>]) {
        let items: Vec<String> = vs
            .iter()
            .map(|inner| {
                let xs: Vec<String> = inner.iter().map(usize::to_string).collect();
                format!("[{}]", xs.join(", "))
            })
            .collect();
        self.out.push_str(&format!("{key} = [{}]\n", items.join(", ")));
    }

    pub fn exponent(&mut self, key: &str, e: Order) {
        match e {
            Order::Finite(v) => self.float(key, v),
            Order::Infinity => self.string(key, "inf"),
        }
    }

    pub fn finish(self) -> String {
        self.out
    }
}

fn emit_uni(r: &mut Report, u: &UnivariateLoss<f64>) {
    if let UnivariateLoss::Affine { slope, intercept } = u {
        r.string("uni", "affine");
        r.float("slope", *slope);
        r.float("intercept", *intercept);
    } else {
        r.string("uni", &u.to_string());
    }
}

fn emit_instance(r: &mut Report, inst: &Inst) {
    r.table("config.instance");
    r.string("family", inst.family.name());
    if let Some(u) = &inst.uni {
        emit_uni(r, u);
    }
    if let Some(b) = &inst.beta {
        r.float_list("beta", b);
    }
    r.exponent("q", inst.q);
    if let Some(p) = inst.p {
        r.exponent("p", p);
    }
    if let Some(a) = inst.alpha {
        r.float("alpha", a);
    }
    for (uni, beta) in &inst.pieces {
        r.array_table("config.instance.pieces");
        emit_uni(r, uni);
        r.float_list("beta", beta);
    }
}

fn emit_data(r: &mut Report, data: &DataSource, sub: Sub) {
    match data {
        DataSource::Csv { path, labeled } => {
            r.table("config.data");
            r.string("path", &path.display().to_string());
            if *labeled {
                r.boolean("labeled", true);
            }
        }
        DataSource::Synthetic { sampler, dim, n, seed, lo, hi, sign_labels } => {
            r.table("config.data.synthetic");
            r.string("sampler", sampler.name());
            r.int("dim", *dim as u64);
            r.int("n", *n as u64);
            // The radius-rule runner draws its seeds from [asymptotics].
            if sub != Sub::Asymptotics {
                r.int("seed", *seed);
            }
            if !lo.is_empty() {
                r.float_list("lo", lo);
                r.float_list("hi", hi);
            }
            if *sign_labels {
                r.boolean("sign_labels", true);
            }
        }
    }
}

fn emit_oracle(r: &mut Report, o: &OracleCfg) {
    r.table("config.oracle");
    r.int("levels", o.levels as u64);
    match &o.mode {
        OracleMode::Directional => r.string("mode", "directional"),
        OracleMode::Grid { resolution, halfwidth } => {
            r.string("mode", "grid");
            r.float("resolution", *resolution);
            r.float("halfwidth", *halfwidth);
        }
    }
}

fn emit_choice(r: &mut Report, c: &ChoiceCfg) {
    r.table("config.choice");
    r.string("family", c.family.name());
    r.float_list("zbar", &c.zbar);
    r.float("eta", c.eta);
    if !c.nests.is_empty() {
        r.int_list_list("nests", &c.nests);
        r.float_list("taus", &c.taus);
    }
}

fn emit_fit(r: &mut Report, f: &FitCfg) {
    r.table("config.fit");
    r.int("max_iters", f.max_iters as u64);
    match &f.step {
        StepKind::Geometric { initial, rate } => {
            r.string("step", "geometric");
            r.float("initial", *initial);
            r.float("rate", *rate);
        }
        StepKind::InvSqrt { scale } => {
            r.string("step", "inv-sqrt");
            r.float("scale", *scale);
        }
    }
    match &f.domain {
        DomainKind::Unconstrained => r.string("domain", "unconstrained"),
        DomainKind::Simplex => r.string("domain", "simplex"),
        DomainKind::Box { lo, hi } => {
            r.string("domain", "box");
            r.float_list("lo", lo);
            r.float_list("hi", hi);
        }
    }
    r.int("seed", f.seed);
    if let Some(init) = &f.init {
        r.float_list("init", init);
    }
    r.float("tol", f.tol);
}

/// Echoes the resolved config in a fixed section and key order. Only the
/// sections the subcommand consumed appear; defaults are written out, so the
/// embedded config is complete on its own.
pub fn emit_config(r: &mut Report, cfg: &Resolved) {
    if let Some(inst) = &cfg.inst {
        emit_instance(r, inst);
    }
    if let Some(data) = &cfg.data {
        emit_data(r, data, cfg.sub);
    }
    if let Some(o) = &cfg.oracle {
        emit_oracle(r, o);
    }
    if let Some(a) = &cfg.asym {
        r.table("config.asymptotics");
        r.float_list("alphas", &a.alphas);
        r.int_list("seeds", &a.seeds);
    }
    if let Some(c) = &cfg.choice {
        emit_choice(r, c);
    }
    if let Some(f) = &cfg.fit {
        emit_fit(r, f);
    }
    if cfg.report_path.is_some() || cfg.curve_dir.is_some() {
        r.table("config.output");
        if let Some(p) = &cfg.report_path {
            r.string("report", &p.display().to_string());
        }
        if let Some(d) = &cfg.curve_dir {
            r.string("curve_dir", &d.display().to_string());
        }
    }
    if cfg.sub == Sub::EquivalenceCheck {
        r.table("config.tolerances");
        r.float("gap", cfg.gap_tol);
    }
}
