//! Evaluate a parsed netlist: build the space registry, the component
//! triples, the network wiring, the initial state, and the run settings.
//!
//! Reference errors (unknown spaces/components, bad builtin arguments) come
//! back as [`Diagnostic`]s pointing at the offending token. Numerical
//! invariant checks (unitarity, self-adjointness) are a separate pass so the
//! `check` command can report them instead of refusing to compile.

use std::collections::HashMap;

use num_complex::Complex64;

use slhnet_core::classical::{embed_sde_grid, Grid};
use slhnet_core::dynamics::DensityOperator;
use slhnet_core::holevo::{holevo_to_slh, HolevoGenerator};
use slhnet_core::network::NetworkSpec;
use slhnet_core::{
    components, FactorKind, Operator, OperatorMatrix, Signature, SlhTriple, SpaceRegistry,
};

use crate::ast::{
    ComponentBody, Diagnostic, Expr, ExprKind, Name, NetlistDocument, Span, SpaceKind, StateDecl,
    Statement,
};

/// One component with provenance.
#[derive(Debug)]
pub struct CompiledComponent {
    pub name: String,
    pub triple: SlhTriple,
    /// Grid embeddings keep a boundary hermiticity defect in `H` on purpose;
    /// the invariant checker treats them as warnings, not failures.
    pub boundary_exempt: bool,
}

/// Run-block settings (command-line flags override these).
#[derive(Clone, Debug, Default)]
pub struct RunSettings {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub seed: Option<u64>,
    pub channel: Option<usize>,
    pub runs: Option<usize>,
    pub tol: Option<f64>,
    /// Observable expressions with their rendered names.
    pub obs: Vec<(String, Expr)>,
}

#[derive(Debug)]
pub struct CompiledNetlist {
    pub registry: SpaceRegistry,
    pub components: Vec<CompiledComponent>,
    pub connections: Vec<(Vec<Name>, Vec<Name>)>,
    pub couplings: Vec<(Operator, Operator)>,
    pub state: Option<(StateDecl, Span)>,
    pub run: RunSettings,
    pub grids: HashMap<String, Grid>,
}

pub fn compile(doc: &NetlistDocument) -> Result<CompiledNetlist, Vec<Diagnostic>> {
    let mut out = CompiledNetlist {
        registry: SpaceRegistry::new(),
        components: Vec::new(),
        connections: Vec::new(),
        couplings: Vec::new(),
        state: None,
        run: RunSettings::default(),
        grids: HashMap::new(),
    };
    let mut diagnostics = Vec::new();

    for stmt in &doc.statements {
        let result = compile_statement(stmt, &mut out);
        if let Err(d) = result {
            diagnostics.push(d);
        }
    }
    if diagnostics.is_empty() {
        Ok(out)
    } else {
        Err(diagnostics)
    }
}

fn compile_statement(stmt: &Statement, out: &mut CompiledNetlist) -> Result<(), Diagnostic> {
    match stmt {
        Statement::Space { name, kind, dim } => {
            let result = match kind {
                SpaceKind::Fock => out.registry.fock(&name.text, *dim),
                SpaceKind::Dim => out.registry.generic(&name.text, *dim),
            };
            result.map_err(|e| Diagnostic::error(e.to_string(), name.span.line, name.span.column))?;
            Ok(())
        }
        Statement::Component { name, body } => {
            if out.components.iter().any(|c| c.name == name.text) {
                return Err(Diagnostic::error(
                    format!("component `{}` is already defined", name.text),
                    name.span.line,
                    name.span.column,
                ));
            }
            let (triple, boundary_exempt) = compile_component(name, body, out)?;
            out.components.push(CompiledComponent {
                name: name.text.clone(),
                triple,
                boundary_exempt,
            });
            Ok(())
        }
        Statement::Connect { sources, targets } => {
            for n in sources.iter().chain(targets) {
                if !out.components.iter().any(|c| c.name == n.text) {
                    return Err(Diagnostic::error(
                        format!("unknown component `{}`", n.text),
                        n.span.line,
                        n.span.column,
                    ));
                }
            }
            out.connections.push((sources.clone(), targets.clone()));
            Ok(())
        }
        Statement::Couple { m, n } => {
            let ctx = EvalContext::of(out);
            let m_op = eval_expr(&ctx, m)?;
            let n_op = eval_expr(&ctx, n)?;
            out.couplings.push((m_op, n_op));
            Ok(())
        }
        Statement::State { decl, span } => {
            if out.state.is_some() {
                return Err(Diagnostic::error(
                    "multiple state declarations (exactly one is allowed)",
                    span.line,
                    span.column,
                ));
            }
            // validate the referenced space now
            match decl {
                StateDecl::Fock { space, .. } | StateDecl::Coherent { space, .. } => {
                    out.registry.get(&space.text).map_err(|e| {
                        Diagnostic::error(e.to_string(), space.span.line, space.span.column)
                    })?;
                }
                StateDecl::Vacuum => {}
            }
            out.state = Some((decl.clone(), *span));
            Ok(())
        }
        Statement::Run { entries } => {
            fn real_of(out: &CompiledNetlist, e: &Expr) -> Result<f64, Diagnostic> {
                eval_real(&EvalContext::of(out), e)
            }
            fn int_of(out: &CompiledNetlist, e: &Expr) -> Result<usize, Diagnostic> {
                eval_integer(&EvalContext::of(out), e)
            }
            for (key, value) in entries {
                match key.text.as_str() {
                    "dt" => out.run.dt = Some(real_of(out, value)?),
                    "T" => out.run.t_final = Some(real_of(out, value)?),
                    "seed" => out.run.seed = Some(int_of(out, value)? as u64),
                    "channel" => out.run.channel = Some(int_of(out, value)?),
                    "runs" => out.run.runs = Some(int_of(out, value)?),
                    "tol" => out.run.tol = Some(real_of(out, value)?),
                    "obs" => out
                        .run
                        .obs
                        .push((expr_to_string(value), value.clone())),
                    other => {
                        return Err(Diagnostic::error(
                            format!(
                                "unknown run parameter `{other}` (expected dt, T, seed, channel, runs, tol or obs)"
                            ),
                            key.span.line,
                            key.span.column,
                        ))
                    }
                }
            }
            Ok(())
        }
    }
}

fn compile_component(
    name: &Name,
    body: &ComponentBody,
    out: &mut CompiledNetlist,
) -> Result<(SlhTriple, bool), Diagnostic> {
    match body {
        ComponentBody::Builtin { builtin, args } => match builtin.text.as_str() {
            "cavity" => {
                expect_args(builtin, args, 3)?;
                let factor = space_arg(out, &args[0], FactorKind::Fock)?;
                let ctx = EvalContext::of(out);
                let gamma = eval_real(&ctx, &args[1])?;
                let delta = eval_real(&ctx, &args[2])?;
                let triple = components::cavity(&factor, gamma, delta)
                    .map_err(|e| at(builtin.span, e.to_string()))?;
                Ok((triple, false))
            }
            "beamsplitter" => {
                expect_args(builtin, args, 2)?;
                let ctx = EvalContext::of(out);
                let alpha = eval_scalar(&ctx, &args[0])?;
                let beta = eval_scalar(&ctx, &args[1])?;
                let triple = components::beamsplitter(alpha, beta).map_err(|e| {
                    at(
                        builtin.span,
                        format!("invalid beamsplitter parameters: {e}"),
                    )
                })?;
                Ok((triple, false))
            }
            "passthrough" => {
                expect_args(builtin, args, 1)?;
                let ctx = EvalContext::of(out);
                let n = eval_integer(&ctx, &args[0])?;
                Ok((components::passthrough(n), false))
            }
            "holevo" => {
                expect_args(builtin, args, 4)?;
                let ctx = EvalContext::of(out);
                let h00 = eval_expr(&ctx, &args[0])?;
                let h01 = eval_expr(&ctx, &args[1])?;
                let h10 = eval_expr(&ctx, &args[2])?;
                let h11 = eval_expr(&ctx, &args[3])?;
                let generator = HolevoGenerator::new(h00, h01, h10, h11)
                    .map_err(|e| at(builtin.span, e.to_string()))?;
                let triple =
                    holevo_to_slh(&generator).map_err(|e| at(builtin.span, e.to_string()))?;
                Ok((triple, false))
            }
            "classical_sde" => {
                expect_args(builtin, args, 6)?;
                let ctx = EvalContext::of(out);
                let min = eval_real(&ctx, &args[0])?;
                let max = eval_real(&ctx, &args[1])?;
                let points = eval_integer(&ctx, &args[2])?;
                let grid =
                    Grid::new(min, max, points).map_err(|e| at(builtin.span, e.to_string()))?;
                // pre-sample the coefficient expressions on the grid so any
                // evaluation error surfaces as a diagnostic
                let nodes = grid.nodes();
                let mut samples: Vec<Vec<f64>> = Vec::with_capacity(3);
                for expr in &args[3..6] {
                    let mut values = Vec::with_capacity(nodes.len());
                    for &x in &nodes {
                        let ctx = EvalContext {
                            x: Some(x),
                            ..EvalContext::of(out)
                        };
                        values.push(eval_real(&ctx, expr)?);
                    }
                    samples.push(values);
                }
                let lookup = |values: Vec<f64>| {
                    let (min, points) = (grid.min, grid.points);
                    let h = grid.spacing();
                    move |x: f64| {
                        let i = (((x - min) / h).round() as usize).min(points - 1);
                        values[i]
                    }
                };
                let h_samples = samples.pop().unwrap();
                let g_samples = samples.pop().unwrap();
                let f_samples = samples.pop().unwrap();
                let embedding = embed_sde_grid(
                    &mut out.registry,
                    &name.text,
                    grid,
                    lookup(f_samples),
                    lookup(g_samples),
                    lookup(h_samples),
                )
                .map_err(|e| at(builtin.span, e.to_string()))?;
                out.grids.insert(name.text.clone(), grid);
                let triple = embedding
                    .component()
                    .map_err(|e| at(builtin.span, e.to_string()))?;
                Ok((triple, true))
            }
            other => Err(at(
                builtin.span,
                format!(
                    "unknown builtin `{other}` (expected cavity, beamsplitter, passthrough, holevo or classical_sde)"
                ),
            )),
        },
        ComponentBody::Literal { s, l, h } => {
            let ctx = EvalContext::of(out);
            let n = match (s, l) {
                (Some(rows), Some(col)) => {
                    if rows.len() != col.len() {
                        return Err(at(
                            name.span,
                            format!(
                                "S is {}x{} but L has {} entries",
                                rows.len(),
                                rows.first().map_or(0, Vec::len),
                                col.len()
                            ),
                        ));
                    }
                    rows.len()
                }
                (Some(rows), None) => rows.len(),
                (None, Some(col)) => col.len(),
                (None, None) => 0,
            };
            if let Some(rows) = s {
                if rows.iter().any(|r| r.len() != n) {
                    return Err(at(name.span, "S must be square".to_string()));
                }
            }
            let sig = Signature::scalar();
            let s_mat = match s {
                Some(rows) => {
                    let mut entries = Vec::new();
                    for row in rows {
                        let mut ops = Vec::new();
                        for e in row {
                            ops.push(eval_expr(&ctx, e)?);
                        }
                        entries.push(ops);
                    }
                    OperatorMatrix::from_rows(entries)
                        .map_err(|e| at(name.span, e.to_string()))?
                }
                None => OperatorMatrix::identity(n, &sig),
            };
            let l_mat = match l {
                Some(col) => {
                    let mut ops = Vec::new();
                    for e in col {
                        ops.push(eval_expr(&ctx, e)?);
                    }
                    OperatorMatrix::column(ops).map_err(|e| at(name.span, e.to_string()))?
                }
                None => OperatorMatrix::zeros(n, 1, &sig),
            };
            let h_op = match h {
                Some(e) => eval_expr(&ctx, e)?,
                None => Operator::zero(&sig),
            };
            // invariants are checked separately so `check` can report them
            let triple = SlhTriple::new_unchecked(s_mat, l_mat, h_op)
                .map_err(|e| at(name.span, e.to_string()))?;
            Ok((triple, false))
        }
    }
}

fn at(span: Span, message: String) -> Diagnostic {
    Diagnostic::error(message, span.line, span.column)
}

fn expect_args(builtin: &Name, args: &[Expr], n: usize) -> Result<(), Diagnostic> {
    if args.len() != n {
        return Err(at(
            builtin.span,
            format!(
                "`{}` expects {} argument(s), got {}",
                builtin.text,
                n,
                args.len()
            ),
        ));
    }
    Ok(())
}

fn space_arg(
    out: &CompiledNetlist,
    expr: &Expr,
    required: FactorKind,
) -> Result<std::sync::Arc<slhnet_core::SpaceFactor>, Diagnostic> {
    match &expr.kind {
        ExprKind::Ident(label) => {
            let factor = out
                .registry
                .get(label)
                .map_err(|e| at(expr.span, e.to_string()))?;
            if required == FactorKind::Fock && factor.kind() != FactorKind::Fock {
                return Err(at(
                    expr.span,
                    format!("space `{label}` must be a fock space"),
                ));
            }
            Ok(factor)
        }
        _ => Err(at(expr.span, "expected a space name".to_string())),
    }
}

/// Context for expression evaluation.
pub struct EvalContext<'a> {
    pub registry: &'a SpaceRegistry,
    pub grids: &'a HashMap<String, Grid>,
    /// Grid variable binding inside `classical_sde` coefficient expressions.
    pub x: Option<f64>,
}

impl<'a> EvalContext<'a> {
    pub fn of(compiled: &'a CompiledNetlist) -> Self {
        EvalContext {
            registry: &compiled.registry,
            grids: &compiled.grids,
            x: None,
        }
    }
}

/// Evaluate an expression to an operator (scalars live on the empty
/// signature).
pub fn eval_expr(ctx: &EvalContext, expr: &Expr) -> Result<Operator, Diagnostic> {
    match &expr.kind {
        ExprKind::Number(v) => Ok(Operator::scalar_re(*v)),
        ExprKind::Imag(v) => Ok(Operator::scalar(Complex64::new(0.0, *v))),
        ExprKind::Ident(name) => match name.as_str() {
            "i" => Ok(Operator::scalar(Complex64::new(0.0, 1.0))),
            "x" => match ctx.x {
                Some(v) => Ok(Operator::scalar_re(v)),
                None => Err(at(
                    expr.span,
                    "`x` is only available inside classical_sde coefficients".to_string(),
                )),
            },
            other => Err(at(
                expr.span,
                format!(
                    "unknown identifier `{other}` (space names may only appear inside operator builtins)"
                ),
            )),
        },
        ExprKind::Call { name, args } => eval_call(ctx, expr, name, args),
        ExprKind::Neg(inner) => Ok(-&eval_expr(ctx, inner)?),
        ExprKind::Add(a, b) => Ok(&eval_expr(ctx, a)? + &eval_expr(ctx, b)?),
        ExprKind::Sub(a, b) => Ok(&eval_expr(ctx, a)? - &eval_expr(ctx, b)?),
        ExprKind::Mul(a, b) => Ok(&eval_expr(ctx, a)? * &eval_expr(ctx, b)?),
        ExprKind::Adjoint(inner) => Ok(eval_expr(ctx, inner)?.dagger()),
    }
}

fn eval_call(
    ctx: &EvalContext,
    expr: &Expr,
    name: &str,
    args: &[Expr],
) -> Result<Operator, Diagnostic> {
    let one_space = |required: FactorKind| -> Result<_, Diagnostic> {
        if args.len() != 1 {
            return Err(at(
                expr.span,
                format!("`{name}` expects one space argument"),
            ));
        }
        match &args[0].kind {
            ExprKind::Ident(label) => {
                let factor = ctx
                    .registry
                    .get(label)
                    .map_err(|e| at(args[0].span, e.to_string()))?;
                if required == FactorKind::Fock && factor.kind() != FactorKind::Fock {
                    return Err(at(
                        args[0].span,
                        format!("`{name}` needs a fock space, `{label}` is not one"),
                    ));
                }
                Ok(factor)
            }
            _ => Err(at(args[0].span, "expected a space name".to_string())),
        }
    };
    match name {
        "a" => {
            let f = one_space(FactorKind::Fock)?;
            Operator::annihilation(&f).map_err(|e| at(expr.span, e.to_string()))
        }
        "adag" => {
            let f = one_space(FactorKind::Fock)?;
            Operator::creation(&f).map_err(|e| at(expr.span, e.to_string()))
        }
        "n" => {
            let f = one_space(FactorKind::Fock)?;
            Operator::number(&f).map_err(|e| at(expr.span, e.to_string()))
        }
        "id" => {
            let f = one_space(FactorKind::Generic)?;
            Ok(Operator::identity(&Signature::single(&f)))
        }
        "q" => {
            let f = one_space(FactorKind::Generic)?;
            let grid = ctx.grids.get(f.label()).ok_or_else(|| {
                at(
                    args[0].span,
                    format!(
                        "`q` needs a grid space created by classical_sde; `{}` is not one",
                        f.label()
                    ),
                )
            })?;
            let nodes: Vec<Complex64> = grid.nodes().into_iter().map(Complex64::from).collect();
            Operator::diagonal(&f, &nodes).map_err(|e| at(expr.span, e.to_string()))
        }
        "sqrt" => {
            if args.len() != 1 {
                return Err(at(expr.span, "`sqrt` expects one argument".to_string()));
            }
            let v = eval_real(ctx, &args[0])?;
            if v < 0.0 {
                return Err(at(
                    args[0].span,
                    format!("`sqrt` of a negative number ({v})"),
                ));
            }
            Ok(Operator::scalar_re(v.sqrt()))
        }
        other => Err(at(
            expr.span,
            format!("unknown builtin `{other}` (expected a, adag, n, id, q or sqrt)"),
        )),
    }
}

/// Evaluate to a complex scalar.
pub fn eval_scalar(ctx: &EvalContext, expr: &Expr) -> Result<Complex64, Diagnostic> {
    let op = eval_expr(ctx, expr)?;
    if !op.signature().is_scalar() {
        return Err(at(
            expr.span,
            format!("expected a scalar, got an operator on `{}`", op.signature()),
        ));
    }
    Ok(op.matrix()[(0, 0)])
}

/// Evaluate to a real scalar.
pub fn eval_real(ctx: &EvalContext, expr: &Expr) -> Result<f64, Diagnostic> {
    let z = eval_scalar(ctx, expr)?;
    if z.im.abs() > 1e-12 {
        return Err(at(
            expr.span,
            format!("expected a real number, got {z}"),
        ));
    }
    Ok(z.re)
}

/// Evaluate to a nonnegative integer.
pub fn eval_integer(ctx: &EvalContext, expr: &Expr) -> Result<usize, Diagnostic> {
    let v = eval_real(ctx, expr)?;
    if v.fract() != 0.0 || v < 0.0 {
        return Err(at(
            expr.span,
            format!("expected a nonnegative integer, got {v}"),
        ));
    }
    Ok(v as usize)
}

impl CompiledNetlist {
    /// Resolve connection groups and assemble the network.
    pub fn build_network(&self) -> Result<NetworkSpec, Vec<Diagnostic>> {
        let mut diagnostics = Vec::new();
        // group key = ordered member list; a component may sit in one group
        let mut group_of: HashMap<String, Vec<String>> = HashMap::new();
        let mut register_group = |names: &[Name], diagnostics: &mut Vec<Diagnostic>| {
            let members: Vec<String> = names.iter().map(|n| n.text.clone()).collect();
            for n in names {
                match group_of.get(&n.text) {
                    Some(existing) if *existing != members => {
                        diagnostics.push(Diagnostic::error(
                            format!(
                                "component `{}` appears in two different groups (`{}` and `{}`)",
                                n.text,
                                existing.join("+"),
                                members.join("+")
                            ),
                            n.span.line,
                            n.span.column,
                        ));
                    }
                    _ => {
                        group_of.insert(n.text.clone(), members.clone());
                    }
                }
            }
        };
        for (sources, targets) in &self.connections {
            register_group(sources, &mut diagnostics);
            register_group(targets, &mut diagnostics);
        }
        if !diagnostics.is_empty() {
            return Err(diagnostics);
        }

        let mut spec = NetworkSpec::new();
        let mut inserted: Vec<String> = Vec::new();
        for component in &self.components {
            let members = group_of
                .get(&component.name)
                .cloned()
                .unwrap_or_else(|| vec![component.name.clone()]);
            let display = members.join("+");
            if inserted.contains(&display) {
                continue;
            }
            let mut triple: Option<SlhTriple> = None;
            for m in &members {
                let part = &self
                    .components
                    .iter()
                    .find(|c| c.name == *m)
                    .expect("membership validated")
                    .triple;
                triple = Some(match triple {
                    None => part.clone(),
                    Some(acc) => acc
                        .concatenate(part)
                        .map_err(|e| vec![Diagnostic::error(e.to_string(), 1, 1)])?,
                });
            }
            spec.add_component(&display, triple.expect("nonempty group"))
                .map_err(|e| vec![Diagnostic::error(e.to_string(), 1, 1)])?;
            inserted.push(display);
        }

        for (sources, targets) in &self.connections {
            let src: Vec<String> = sources.iter().map(|n| n.text.clone()).collect();
            let dst: Vec<String> = targets.iter().map(|n| n.text.clone()).collect();
            let span = sources[0].span;
            spec.add_connection(&src.join("+"), &dst.join("+"))
                .map_err(|e| vec![Diagnostic::error(e.to_string(), span.line, span.column)])?;
        }
        for (m, n) in &self.couplings {
            spec.add_direct_coupling(m.clone(), n.clone());
        }
        Ok(spec)
    }

    /// Build the declared initial state on a signature.
    pub fn build_state(&self, sig: &Signature) -> Result<DensityOperator, Diagnostic> {
        let (decl, span) = self.state.as_ref().ok_or_else(|| {
            Diagnostic::error(
                "this command needs a `state` declaration in the netlist",
                1,
                1,
            )
        })?;
        match decl {
            StateDecl::Vacuum => Ok(DensityOperator::vacuum(sig)),
            StateDecl::Fock { space, level } => {
                let factor = self
                    .registry
                    .get(&space.text)
                    .map_err(|e| at(space.span, e.to_string()))?;
                DensityOperator::fock(sig, &factor, *level)
                    .map_err(|e| at(space.span, e.to_string()))
            }
            StateDecl::Coherent { space, re, im } => {
                let factor = self
                    .registry
                    .get(&space.text)
                    .map_err(|e| at(space.span, e.to_string()))?;
                if factor.kind() != FactorKind::Fock {
                    return Err(at(
                        *span,
                        format!("coherent states need a fock space, `{}` is not one", space.text),
                    ));
                }
                DensityOperator::coherent(sig, &factor, Complex64::new(*re, *im))
                    .map_err(|e| at(space.span, e.to_string()))
            }
        }
    }
}

/// Render an expression back to text (used for CSV column headers).
pub fn expr_to_string(expr: &Expr) -> String {
    match &expr.kind {
        ExprKind::Number(v) => format!("{v}"),
        ExprKind::Imag(v) => format!("{v}i"),
        ExprKind::Ident(s) => s.clone(),
        ExprKind::Call { name, args } => {
            let inner: Vec<String> = args.iter().map(expr_to_string).collect();
            format!("{name}({})", inner.join(","))
        }
        ExprKind::Neg(e) => format!("-{}", expr_to_string(e)),
        ExprKind::Add(a, b) => format!("{}+{}", expr_to_string(a), expr_to_string(b)),
        ExprKind::Sub(a, b) => format!("{}-{}", expr_to_string(a), expr_to_string(b)),
        ExprKind::Mul(a, b) => format!("{}*{}", expr_to_string(a), expr_to_string(b)),
        ExprKind::Adjoint(e) => format!("{}'", expr_to_string(e)),
    }
}
