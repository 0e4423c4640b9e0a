//! Portability checks driving encoder, solver and decoder.

use crate::cat::MemoryModel;
use crate::encode::{encode_portability, encode_reachability, Encoding, Options, State, StateScope};
use crate::events::{CompileError, EventGraph};
use crate::solve::{solve, SolveError, SolverConfig, SolverResult, Status};
use crate::witness::{decode, reach_state, DecodeError, ExecutionWitness};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("{0}")]
    Encode(String),
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Portable,
    NotPortable(Box<ExecutionWitness>),
    Unknown(String),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Portable => "Portable",
            Verdict::NotPortable(_) => "NotPortable",
            Verdict::Unknown(_) => "Unknown",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Stats {
    pub vars: usize,
    pub assertions: usize,
    pub solver_time: Duration,
}

fn stats(e: &Encoding, r: &SolverResult) -> Stats {
    Stats { vars: e.formula.num_vars(), assertions: e.formula.assertions.len(), solver_time: r.elapsed }
}

fn witness_of(e: &Encoding, r: &SolverResult) -> Result<ExecutionWitness, DecodeError> {
    let models: Vec<_> = e.tgt.iter().chain(e.src.iter()).collect();
    decode(r, &e.enc, &models)
}

/// Single-query portability check.
pub fn check_portability(g: &EventGraph, src: &MemoryModel, tgt: &MemoryModel, opts: &Options, cfg: &SolverConfig) -> Result<(Verdict, Stats), CheckError> {
    let e = encode_portability(g, src, tgt, opts);
    let r = solve(&e.formula, cfg)?;
    let v = match r.status {
        Status::Unsat => Verdict::Portable,
        Status::Unknown => Verdict::Unknown("solver returned unknown or timed out".into()),
        Status::Sat => Verdict::NotPortable(Box::new(witness_of(&e, &r)?)),
    };
    Ok((v, stats(&e, &r)))
}

#[derive(Clone, Debug)]
pub enum StateVerdict {
    Portable,
    /// Not portable, but every bug-witness state found is reachable under the source.
    StateReachable { witness: Box<ExecutionWitness>, state: State },
    /// A target state the source cannot reach.
    NewState { witness: Box<ExecutionWitness>, state: State },
    Unknown(String),
}

impl StateVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            StateVerdict::Portable => "Portable",
            StateVerdict::StateReachable { .. } => "NotPortable+StateReachable",
            StateVerdict::NewState { .. } => "NotPortable+NewState",
            StateVerdict::Unknown(_) => "Unknown",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Refinement {
    pub verdict: StateVerdict,
    /// Number of reachability queries issued.
    pub queries: usize,
}

/// Refine a portability bug into a state-level verdict: each witness state
/// is checked for reachability under the source model, and reachable states
/// are blocked until the portability query becomes unsatisfiable.
pub fn check_state_refinement(
    g: &EventGraph,
    src: &MemoryModel,
    tgt: &MemoryModel,
    opts: &Options,
    cfg: &SolverConfig,
    scope: StateScope,
    budget: usize,
) -> Result<Refinement, CheckError> {
    let mut blocked: Vec<State> = Vec::new();
    let mut first: Option<(ExecutionWitness, State)> = None;
    let mut queries = 0;
    while queries < budget {
        let mut e = encode_portability(g, src, tgt, opts);
        for s in &blocked {
            let eq = e.enc.state_equals(&mut e.formula, s).map_err(CheckError::Encode)?;
            e.formula.assert(crate::encode::BoolExpr::not(eq));
        }
        let r = solve(&e.formula, cfg)?;
        match r.status {
            Status::Unknown => return Ok(Refinement { verdict: StateVerdict::Unknown("portability query undecided".into()), queries }),
            Status::Unsat => {
                let verdict = match first {
                    None => StateVerdict::Portable,
                    Some((w, state)) => StateVerdict::StateReachable { witness: Box::new(w), state },
                };
                return Ok(Refinement { verdict, queries });
            }
            Status::Sat => {
                let w = witness_of(&e, &r)?;
                let state = scope.project(reach_state(&w, g));
                let reach = encode_reachability(g, src, &state).map_err(CheckError::Encode)?;
                queries += 1;
                match solve(&reach.formula, cfg)?.status {
                    Status::Unsat => return Ok(Refinement { verdict: StateVerdict::NewState { witness: Box::new(w), state }, queries }),
                    Status::Unknown => return Ok(Refinement { verdict: StateVerdict::Unknown("reachability query undecided".into()), queries }),
                    Status::Sat => {
                        first.get_or_insert((w, state.clone()));
                        blocked.push(state);
                    }
                }
            }
        }
    }
    Ok(Refinement { verdict: StateVerdict::Unknown("state portability undecided within the refinement budget".into()), queries })
}

#[derive(Clone, Debug)]
pub enum HighLevelVerdict {
    Portable,
    /// A target-consistent execution whose high-level projection only
    /// source-inconsistent executions share.
    NotPortable { source: Box<ExecutionWitness>, target: Box<ExecutionWitness> },
    Unknown(String),
}

impl HighLevelVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            HighLevelVerdict::Portable => "Portable",
            HighLevelVerdict::NotPortable { .. } => "NotPortable",
            HighLevelVerdict::Unknown(_) => "Unknown",
        }
    }
}

/// Portability of a high-level program between two compilations `s` and `t`
/// whose memory instructions carry `@hl` origin labels.
pub fn check_highlevel(
    p_h: &crate::prog::Program,
    s: &EventGraph,
    t: &EventGraph,
    src: &MemoryModel,
    tgt: &MemoryModel,
    cfg: &SolverConfig,
) -> Result<(HighLevelVerdict, Stats), CheckError> {
    let e = crate::encode::encode_highlevel_portability(p_h, s, t, src, tgt).map_err(CheckError::Encode)?;
    let r = solve(&e.formula, cfg)?;
    let v = match r.status {
        Status::Unsat => HighLevelVerdict::Portable,
        Status::Unknown => HighLevelVerdict::Unknown("solver returned unknown or timed out".into()),
        Status::Sat => HighLevelVerdict::NotPortable {
            source: Box::new(decode(&r, &e.s, &[&e.src])?),
            target: Box::new(decode(&r, &e.t, &[&e.tgt])?),
        },
    };
    let st = Stats { vars: e.formula.num_vars(), assertions: e.formula.assertions.len(), solver_time: r.elapsed };
    Ok((v, st))
}
