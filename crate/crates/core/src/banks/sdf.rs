//! Homogeneous synchronous-dataflow simulator for the accelerator template.
//!
//! The streaming FFT block is a graph of actors (counter, address generators,
//! ports, twiddle unit, multiplier, butterfly, pipeline) connected by
//! unit-rate channels. An actor fires when every input channel holds a token;
//! its outputs appear after its delay. A schedule exists exactly when every
//! directed cycle carries positive total delay, and the activation trace of a
//! program is deterministic.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SdfError {
    #[error("arc references unknown node {0}")]
    UnknownNode(usize),
    #[error("template contains a zero-delay cycle through node {0}")]
    ZeroDelayCycle(usize),
    #[error("deadlock: no actor can fire at tick {0}")]
    Deadlock(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct Node {
    pub name: String,
    /// Ticks between consuming inputs and producing outputs; sources with a
    /// self-loop of delay 1 fire once per tick.
    pub delay: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub initial_tokens: usize,
}

/// Homogeneous SDF graph with per-node firing delays.
#[derive(Debug, Clone)]
pub struct ArchTemplate {
    pub nodes: Vec<Node>,
    pub arcs: Vec<Arc>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Instruction {
    /// Iterations of the graph under one configuration; configurations only
    /// change between instructions, so the trace shape is configuration-free.
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Activation {
    pub tick: usize,
    pub node: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    pub activations: Vec<Activation>,
    /// Tick after the last token was produced.
    pub total_ticks: usize,
}

impl ArchTemplate {
    pub fn new(nodes: Vec<Node>, arcs: Vec<Arc>) -> Result<Self, SdfError> {
        for arc in &arcs {
            if arc.from >= nodes.len() {
                return Err(SdfError::UnknownNode(arc.from));
            }
            if arc.to >= nodes.len() {
                return Err(SdfError::UnknownNode(arc.to));
            }
        }
        let t = Self { nodes, arcs };
        t.check_cycles()?;
        Ok(t)
    }

    /// Rejects the template when some directed cycle has zero total delay;
    /// such a cycle would demand instantaneous feedback and admits no
    /// schedule.
    fn check_cycles(&self) -> Result<(), SdfError> {
        let n = self.nodes.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for arc in &self.arcs {
            adj[arc.from].push(arc.to);
        }
        // DFS over nodes with zero delay only; a cycle within that subgraph
        // is a zero-delay cycle.
        let mut state = vec![0u8; n]; // 0 unvisited, 1 on stack, 2 done
        fn dfs(
            v: usize,
            adj: &[Vec<usize>],
            zero: &[bool],
            state: &mut [u8],
        ) -> Result<(), SdfError> {
            state[v] = 1;
            for &w in &adj[v] {
                if !zero[w] {
                    continue;
                }
                match state[w] {
                    0 => dfs(w, adj, zero, state)?,
                    1 => return Err(SdfError::ZeroDelayCycle(w)),
                    _ => {}
                }
            }
            state[v] = 2;
            Ok(())
        }
        let zero: Vec<bool> = self.nodes.iter().map(|nd| nd.delay == 0).collect();
        for v in 0..n {
            if zero[v] && state[v] == 0 {
                dfs(v, &adj, &zero, &mut state)?;
            }
        }
        Ok(())
    }

    /// Runs a program and returns the full activation trace. Each node fires
    /// `iterations` times per instruction; instructions execute back to back
    /// and each drains before the next starts.
    pub fn simulate(&self, program: &[Instruction]) -> Result<Trace, SdfError> {
        let n = self.nodes.len();
        let mut activations = Vec::new();
        let mut tick = 0usize;

        for instr in program {
            let mut fired = vec![0usize; n];
            let mut tokens: Vec<usize> = self.arcs.iter().map(|a| a.initial_tokens).collect();
            // (arrival tick, arc) for tokens in flight
            let mut in_flight: Vec<(usize, usize)> = Vec::new();
            let start = tick;

            loop {
                // Deliver tokens arriving now.
                in_flight.retain(|&(arrive, arc)| {
                    if arrive == tick {
                        tokens[arc] += 1;
                        false
                    } else {
                        true
                    }
                });

                if fired.iter().all(|&f| f >= instr.iterations) && in_flight.is_empty() {
                    break;
                }

                let mut any = false;
                // One synchronous sweep: every ready node fires.
                let ready: Vec<usize> = (0..n)
                    .filter(|&v| {
                        fired[v] < instr.iterations
                            && self
                                .arcs
                                .iter()
                                .enumerate()
                                .all(|(i, a)| a.to != v || tokens[i] > 0)
                    })
                    .collect();
                for &v in &ready {
                    for (i, a) in self.arcs.iter().enumerate() {
                        if a.to == v {
                            tokens[i] -= 1;
                        }
                    }
                    for (i, a) in self.arcs.iter().enumerate() {
                        if a.from == v {
                            in_flight.push((tick + self.nodes[v].delay.max(1), i));
                        }
                    }
                    activations.push(Activation { tick, node: v });
                    fired[v] += 1;
                    any = true;
                }

                if !any && in_flight.is_empty() {
                    return Err(SdfError::Deadlock(tick));
                }
                tick += 1;
                // Guard against runaway loops from malformed graphs.
                if tick - start > 4 * instr.iterations * n.max(1) + 64 {
                    return Err(SdfError::Deadlock(tick));
                }
            }
        }

        Ok(Trace {
            activations,
            total_ticks: tick,
        })
    }
}

/// The streaming-FFT template: counter feeding address generators, read port,
/// twiddle unit and multiplier, butterfly, pipeline and write port. The
/// pipeline node's delay is sized so a datum read at tick `t` is written at
/// tick `t + pipeline_len`.
pub fn fft_template(pipeline_len: usize) -> ArchTemplate {
    let names = [
        "counter",
        "addr_read",
        "read_port",
        "twiddle",
        "multiplier",
        "butterfly",
        "pipeline",
        "addr_write",
        "write_port",
    ];
    let delays = [
        1usize, // counter: fires every tick via self-loop
        1,      // addr_read
        1,      // read_port
        1,      // twiddle
        1,      // multiplier
        1,      // butterfly
        pipeline_len.saturating_sub(4).max(1),
        pipeline_len.saturating_sub(1).max(1), // addr_write path matches data path
        1,      // write_port
    ];
    let nodes: Vec<Node> = names
        .iter()
        .zip(delays)
        .map(|(n, d)| Node {
            name: n.to_string(),
            delay: d,
        })
        .collect();
    let arcs = vec![
        Arc { from: 0, to: 0, initial_tokens: 1 }, // counter self-loop
        Arc { from: 0, to: 1, initial_tokens: 0 },
        Arc { from: 0, to: 3, initial_tokens: 0 },
        Arc { from: 0, to: 7, initial_tokens: 0 },
        Arc { from: 1, to: 2, initial_tokens: 0 },
        Arc { from: 2, to: 4, initial_tokens: 0 },
        Arc { from: 3, to: 4, initial_tokens: 0 },
        Arc { from: 4, to: 5, initial_tokens: 0 },
        Arc { from: 5, to: 6, initial_tokens: 0 },
        Arc { from: 6, to: 8, initial_tokens: 0 },
        Arc { from: 7, to: 8, initial_tokens: 0 },
    ];
    ArchTemplate::new(nodes, arcs).expect("fft template is well formed")
}

/// Ticks from a read-port firing to the matching write-port firing in
/// [`fft_template`].
pub fn fft_template_write_latency(template: &ArchTemplate) -> usize {
    // read_port -> multiplier -> butterfly -> pipeline -> write_port
    let path = [2usize, 4, 5, 6];
    path.iter().map(|&v| template.nodes[v].delay).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_loop_fires_once_per_tick() {
        let t = ArchTemplate::new(
            vec![Node {
                name: "counter".into(),
                delay: 1,
            }],
            vec![Arc {
                from: 0,
                to: 0,
                initial_tokens: 1,
            }],
        )
        .unwrap();
        let trace = t.simulate(&[Instruction { iterations: 5 }]).unwrap();
        assert_eq!(trace.activations.len(), 5);
        for (i, a) in trace.activations.iter().enumerate() {
            assert_eq!(a.tick, i);
        }
    }

    #[test]
    fn zero_delay_cycle_is_rejected() {
        let err = ArchTemplate::new(
            vec![
                Node {
                    name: "a".into(),
                    delay: 0,
                },
                Node {
                    name: "b".into(),
                    delay: 0,
                },
            ],
            vec![
                Arc {
                    from: 0,
                    to: 1,
                    initial_tokens: 1,
                },
                Arc {
                    from: 1,
                    to: 0,
                    initial_tokens: 0,
                },
            ],
        )
        .unwrap_err();
        assert!(matches!(err, SdfError::ZeroDelayCycle(_)));
    }

    #[test]
    fn fft_template_runs_and_counts_cycles() {
        let t = fft_template(5);
        let iterations = 16;
        let trace = t.simulate(&[Instruction { iterations }]).unwrap();
        // The counter issues one butterfly slot per tick.
        let counter_fires = trace
            .activations
            .iter()
            .filter(|a| a.node == 0)
            .count();
        assert_eq!(counter_fires, iterations);
    }
}
