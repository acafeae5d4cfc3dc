//! Instantiation, monitoring and termination of coding-function instances.
//!
//! The orchestration engine, VNF manager and infrastructure manager are
//! simulated in-process: their messages arrive as [`Event`]s and the machine
//! answers with [`Action`]s. Events are applied one at a time; an event that
//! does not fit the current state is rejected and leaves everything as it
//! was.
//!
//! Phase graph: `1.1 -> 1.2 -> {1.3, 1.4} -> 1.5 -> 2.x* -> 3.1 -> 3.2 ->
//! {3.3, 3.4} -> 3.5`. The bracketed pairs may arrive in either order.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analytics::reliability_nc;
use crate::codec::CodeParams;
use crate::complexity::ComplexityBudget;
use crate::error::{invalid, Error, Result};
use crate::linkdb::{LinkDb, LinkObservation, Route};
use crate::optimizer::{optimize_rate, OptimizerConfig};

pub type InstanceId = String;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LifecycleState {
    Idle,
    Requested,
    Instantiating,
    /// Infrastructure allocation acknowledged, configuration pending.
    ResourcesAllocated,
    /// Configuration acknowledged, allocation pending.
    Configured,
    Active,
    Terminating,
    Terminated,
}

impl fmt::Display for LifecycleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Event {
    UserRequest { service: String },
    OeDispatch,
    VimAllocationAck { units: u64 },
    VnfmConfigAck,
    MonitoringReport { observations: Vec<LinkObservation> },
    TerminationRequest,
    VnfmTerminationAck,
    VimTerminationAck,
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::UserRequest { .. } => "user_request",
            Event::OeDispatch => "oe_dispatch",
            Event::VimAllocationAck { .. } => "vim_allocation_ack",
            Event::VnfmConfigAck => "vnfm_config_ack",
            Event::MonitoringReport { .. } => "monitoring_report",
            Event::TerminationRequest => "termination_request",
            Event::VnfmTerminationAck => "vnfm_termination_ack",
            Event::VimTerminationAck => "vim_termination_ack",
        }
    }
}

/// Network service descriptor; `src` and `dst` reference nodes in the link
/// store.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServiceDescriptor {
    pub name: String,
    pub src: String,
    pub dst: String,
    pub function: String,
    pub k: usize,
    pub q: u8,
    pub packet_bytes: usize,
    pub rho0: f64,
    pub budget: ComplexityBudget,
}

/// Coding-function descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDescriptor {
    pub name: String,
    pub resource_units: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: InstanceId,
    pub service: String,
    pub route: Vec<String>,
    pub n: usize,
    pub state: LifecycleState,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalogues {
    pub ns_catalog: BTreeMap<String, ServiceDescriptor>,
    pub vnf_catalog: BTreeMap<String, FunctionDescriptor>,
    pub nfv_instances: BTreeMap<InstanceId, InstanceRecord>,
    pub nfvi_resources: BTreeMap<InstanceId, u64>,
}

impl Catalogues {
    pub fn allocated(&self, id: &str) -> u64 {
        self.nfvi_resources.get(id).copied().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "lowercase")]
pub enum Decision {
    Keep,
    Recode { n: usize },
    Escalate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvent {
    pub instance: InstanceId,
    /// Pooled loss ratio of the report.
    pub observed_loss: f64,
    /// Reliability at the current block length on the refreshed path.
    pub reliability: f64,
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Action {
    RequestInstantiation { units: u64 },
    Configure { route: Vec<String>, n: usize },
    ConfirmInstantiation,
    Policy(PolicyEvent),
    RequestTermination,
    ConfirmTermination,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub instance: InstanceId,
    pub phase: String,
    pub event: String,
    pub state_after: LifecycleState,
    pub t: u64,
}

#[derive(Clone, Debug, PartialEq)]
struct Instance {
    state: LifecycleState,
    service: Option<String>,
    /// Pending configuration computed at 1.4.
    config: Option<(Route, usize)>,
    vnfm_released: bool,
    vim_released: bool,
}

impl Instance {
    fn new() -> Self {
        Self { state: LifecycleState::Idle, service: None, config: None, vnfm_released: false, vim_released: false }
    }
}

/// The management plane: catalogues, link statistics and every instance.
#[derive(Clone, Debug)]
pub struct Orchestrator {
    catalogues: Catalogues,
    linkdb: LinkDb,
    optimizer: OptimizerConfig,
    instances: BTreeMap<InstanceId, Instance>,
    clock: u64,
    log: Vec<LogEntry>,
    next_id: u64,
}

impl Orchestrator {
    pub fn new(linkdb: LinkDb) -> Self {
        Self {
            catalogues: Catalogues::default(),
            linkdb,
            optimizer: OptimizerConfig::default(),
            instances: BTreeMap::new(),
            clock: 0,
            log: Vec::new(),
            next_id: 1,
        }
    }

    pub fn with_optimizer(mut self, config: OptimizerConfig) -> Self {
        self.optimizer = config;
        self
    }

    pub fn register_function(&mut self, f: FunctionDescriptor) -> Result<()> {
        if f.resource_units == 0 {
            return Err(invalid(format!("function {} needs a nonzero allocation", f.name)));
        }
        self.catalogues.vnf_catalog.insert(f.name.clone(), f);
        Ok(())
    }

    pub fn register_service(&mut self, s: ServiceDescriptor) -> Result<()> {
        if !self.catalogues.vnf_catalog.contains_key(&s.function) {
            return Err(invalid(format!("service {} uses unknown function {}", s.name, s.function)));
        }
        CodeParams::new(s.k, s.k, s.q, s.packet_bytes)?;
        if !(s.rho0 > 0.0 && s.rho0 < 1.0) {
            return Err(invalid(format!("target reliability {} outside (0,1)", s.rho0)));
        }
        for id in [&s.src, &s.dst] {
            if self.linkdb.node(id).is_none() {
                return Err(invalid(format!("service {} references unknown node {id}", s.name)));
            }
        }
        self.catalogues.ns_catalog.insert(s.name.clone(), s);
        Ok(())
    }

    /// New instance in `Idle`.
    pub fn create_instance(&mut self) -> InstanceId {
        let id = format!("vgncf-{}", self.next_id);
        self.next_id += 1;
        self.instances.insert(id.clone(), Instance::new());
        id
    }

    pub fn catalogues(&self) -> &Catalogues {
        &self.catalogues
    }

    pub fn linkdb(&self) -> &LinkDb {
        &self.linkdb
    }

    pub fn state(&self, id: &str) -> Option<LifecycleState> {
        self.instances.get(id).map(|i| i.state)
    }

    pub fn instance_ids(&self) -> impl Iterator<Item = &InstanceId> {
        self.instances.keys()
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// Phase history of one instance.
    pub fn history(&self, id: &str) -> Vec<&LogEntry> {
        self.log.iter().filter(|e| e.instance == id).collect()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn write_log<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.log {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    fn service_of(&self, inst: &Instance) -> &ServiceDescriptor {
        let name = inst.service.as_ref().expect("requested instance has a service");
        &self.catalogues.ns_catalog[name]
    }

    fn template(s: &ServiceDescriptor) -> Result<CodeParams> {
        CodeParams::new(s.k, s.k, s.q, s.packet_bytes)
    }

    /// Route and block length the VNF manager configures.
    fn configuration(&self, linkdb: &LinkDb, s: &ServiceDescriptor) -> Result<(Route, usize)> {
        let route = linkdb.extract_path(&s.src, &s.dst)?;
        let opt = optimize_rate(&Self::template(s)?, &route.profile, s.rho0, &s.budget, &self.optimizer)?;
        Ok((route, opt.point.n))
    }

    /// Applies one event. On error nothing changes.
    pub fn handle_event(&mut self, id: &str, event: Event) -> Result<Vec<Action>> {
        use LifecycleState::*;
        let inst = self
            .instances
            .get(id)
            .ok_or_else(|| invalid(format!("unknown instance {id}")))?
            .clone();
        let reject = || Error::Lifecycle { state: inst.state.to_string(), event: event.name().into() };
        let mut next = inst.clone();
        let mut phases: Vec<&'static str> = Vec::new();
        let mut actions = Vec::new();
        let mut catalogues = self.catalogues.clone();
        let mut linkdb = None;

        match (&event, inst.state) {
            (Event::UserRequest { service }, Idle) => {
                if !catalogues.ns_catalog.contains_key(service) {
                    return Err(invalid(format!("service {service} not in catalogue")));
                }
                next.service = Some(service.clone());
                next.state = Requested;
                phases.push("1.1");
            }
            (Event::OeDispatch, Requested) => {
                let s = self.service_of(&inst);
                let units = catalogues.vnf_catalog[&s.function].resource_units;
                next.state = Instantiating;
                phases.push("1.2");
                actions.push(Action::RequestInstantiation { units });
            }
            (Event::VimAllocationAck { units }, Instantiating | Configured) => {
                if *units == 0 {
                    return Err(invalid("allocation acknowledged with zero units"));
                }
                catalogues.nfvi_resources.insert(id.into(), *units);
                phases.push("1.3");
                next.state = if inst.state == Configured { Active } else { ResourcesAllocated };
            }
            (Event::VnfmConfigAck, Instantiating | ResourcesAllocated) => {
                let config = self.configuration(&self.linkdb, self.service_of(&inst))?;
                actions.push(Action::Configure { route: config.0.nodes.clone(), n: config.1 });
                next.config = Some(config);
                phases.push("1.4");
                next.state = if inst.state == ResourcesAllocated { Active } else { Configured };
            }
            (Event::MonitoringReport { observations }, Active) => {
                let (db, route, policy) = self.policy(id, &inst, observations)?;
                let rec = catalogues.nfv_instances.get_mut(id).expect("active record");
                if let Decision::Recode { n } = policy.decision {
                    rec.n = n;
                }
                rec.route = route.nodes;
                linkdb = Some(db);
                phases.extend(["2.1", "2.2", "2.3", "2.4", "2.5"]);
                actions.push(Action::Policy(policy));
            }
            (Event::TerminationRequest, Active) => {
                next.state = Terminating;
                phases.extend(["3.1", "3.2"]);
                actions.push(Action::RequestTermination);
            }
            (Event::VnfmTerminationAck, Terminating) if !inst.vnfm_released => {
                next.vnfm_released = true;
                phases.push("3.3");
            }
            (Event::VimTerminationAck, Terminating) if !inst.vim_released => {
                next.vim_released = true;
                catalogues.nfvi_resources.insert(id.into(), 0);
                phases.push("3.4");
            }
            _ => return Err(reject()),
        }

        if next.state == Active && inst.state != Active {
            let (route, n) = next.config.clone().expect("configured before activation");
            catalogues.nfv_instances.insert(
                id.into(),
                InstanceRecord {
                    id: id.into(),
                    service: inst.service.clone().expect("service"),
                    route: route.nodes,
                    n,
                    state: Active,
                },
            );
            phases.push("1.5");
            actions.push(Action::ConfirmInstantiation);
        }
        if next.state == Terminating && next.vnfm_released && next.vim_released {
            next.state = Terminated;
            phases.push("3.5");
            actions.push(Action::ConfirmTermination);
        }
        if let Some(rec) = catalogues.nfv_instances.get_mut(id) {
            rec.state = next.state;
        }

        // commit
        for phase in phases {
            self.clock += 1;
            self.log.push(LogEntry {
                instance: id.into(),
                phase: phase.into(),
                event: event.name().into(),
                state_after: next.state,
                t: self.clock,
            });
        }
        self.catalogues = catalogues;
        if let Some(db) = linkdb {
            self.linkdb = db;
        }
        self.instances.insert(id.into(), next);
        Ok(actions)
    }

    /// Folds `observations` into a copy of the link store and decides
    /// whether the active block length still meets the target.
    fn policy(&self, id: &str, inst: &Instance, observations: &[LinkObservation]) -> Result<(LinkDb, Route, PolicyEvent)> {
        let s = self.service_of(inst);
        let mut db = self.linkdb.clone();
        let (mut sent, mut lost) = (0u64, 0u64);
        for obs in observations {
            db.update_stats(obs)?;
            sent += obs.sent;
            lost += obs.lost;
        }
        let route = db.extract_path(&s.src, &s.dst)?;
        let n = self.catalogues.nfv_instances[id].n;
        let params = CodeParams::new(s.k, n, s.q, s.packet_bytes)?;
        let reliability = reliability_nc(&params, &route.profile, route.profile.hops())?;
        let decision = if reliability >= s.rho0 {
            Decision::Keep
        } else {
            let opt = optimize_rate(&Self::template(s)?, &route.profile, s.rho0, &s.budget, &self.optimizer)?;
            if opt.best_effort() {
                Decision::Escalate
            } else {
                Decision::Recode { n: opt.point.n }
            }
        };
        let observed_loss = if sent == 0 { 0.0 } else { lost as f64 / sent as f64 };
        Ok((db, route, PolicyEvent { instance: id.into(), observed_loss, reliability, decision }))
    }

    /// Monitoring report for an active instance; returns the policy outcome.
    pub fn monitoring_tick(&mut self, id: &str, observations: Vec<LinkObservation>) -> Result<PolicyEvent> {
        let actions = self.handle_event(id, Event::MonitoringReport { observations })?;
        actions
            .into_iter()
            .find_map(|a| match a {
                Action::Policy(p) => Some(p),
                _ => None,
            })
            .ok_or_else(|| invalid("monitoring produced no policy decision"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkdb::{GeoLink, GeoNode, NodeRole};
    use chrono::{DateTime, Utc};

    fn ts() -> DateTime<Utc> {
        "2024-03-01T12:00:00Z".parse().unwrap()
    }

    fn orchestrator(delta: f64) -> Orchestrator {
        let mut db = LinkDb::empty();
        for (id, role) in [("gs", NodeRole::Source), ("sat", NodeRole::Relay), ("ut", NodeRole::Sink)] {
            db.add_node(GeoNode { id: id.into(), lat: 10.0, lon: 20.0, role, nc_capable: true }).unwrap();
        }
        for (a, b) in [("gs", "sat"), ("sat", "ut")] {
            db.add_link(GeoLink { src: a.into(), dst: b.into(), delta, samples: 0, updated_at: ts() }).unwrap();
        }
        let mut o = Orchestrator::new(db);
        o.register_function(FunctionDescriptor { name: "snc".into(), resource_units: 4 }).unwrap();
        o.register_service(ServiceDescriptor {
            name: "backhaul".into(),
            src: "gs".into(),
            dst: "ut".into(),
            function: "snc".into(),
            k: 50,
            q: 8,
            packet_bytes: 100,
            rho0: 0.8,
            budget: ComplexityBudget::uniform(10_000_000).unwrap(),
        })
        .unwrap();
        o
    }

    fn activate(o: &mut Orchestrator) -> InstanceId {
        let id = o.create_instance();
        o.handle_event(&id, Event::UserRequest { service: "backhaul".into() }).unwrap();
        o.handle_event(&id, Event::OeDispatch).unwrap();
        o.handle_event(&id, Event::VnfmConfigAck).unwrap();
        o.handle_event(&id, Event::VimAllocationAck { units: 4 }).unwrap();
        id
    }

    fn phases(o: &Orchestrator, id: &str) -> Vec<String> {
        o.history(id).iter().map(|e| e.phase.clone()).collect()
    }

    #[test]
    fn happy_path_instantiation() {
        let mut o = orchestrator(0.1);
        let id = activate(&mut o);
        assert_eq!(o.state(&id), Some(LifecycleState::Active));
        assert_eq!(o.catalogues().allocated(&id), 4);
        assert_eq!(phases(&o, &id), ["1.1", "1.2", "1.4", "1.3", "1.5"]);
        let rec = &o.catalogues().nfv_instances[&id];
        assert_eq!(rec.route, ["gs", "sat", "ut"]);
        assert!(rec.n > 50);
    }

    #[test]
    fn acks_in_either_order() {
        let mut o = orchestrator(0.1);
        let id = o.create_instance();
        o.handle_event(&id, Event::UserRequest { service: "backhaul".into() }).unwrap();
        o.handle_event(&id, Event::OeDispatch).unwrap();
        o.handle_event(&id, Event::VimAllocationAck { units: 4 }).unwrap();
        assert_eq!(o.state(&id), Some(LifecycleState::ResourcesAllocated));
        assert!(o.handle_event(&id, Event::VimAllocationAck { units: 4 }).is_err());
        o.handle_event(&id, Event::VnfmConfigAck).unwrap();
        assert_eq!(o.state(&id), Some(LifecycleState::Active));
    }

    #[test]
    fn out_of_order_rejected_without_change() {
        let mut o = orchestrator(0.1);
        let id = o.create_instance();
        o.handle_event(&id, Event::UserRequest { service: "backhaul".into() }).unwrap();
        let before = (o.catalogues().clone(), o.log().to_vec(), o.clock());
        let err = o.handle_event(&id, Event::TerminationRequest).unwrap_err();
        assert!(matches!(err, Error::Lifecycle { .. }));
        assert!(err.to_string().contains("Requested"));
        assert_eq!((o.catalogues().clone(), o.log().to_vec(), o.clock()), before);
        assert_eq!(o.state(&id), Some(LifecycleState::Requested));
        assert!(o.handle_event(&id, Event::MonitoringReport { observations: vec![] }).is_err());
    }

    #[test]
    fn termination_releases_resources() {
        let mut o = orchestrator(0.1);
        let id = activate(&mut o);
        o.handle_event(&id, Event::TerminationRequest).unwrap();
        o.handle_event(&id, Event::VimTerminationAck).unwrap();
        assert_eq!(o.state(&id), Some(LifecycleState::Terminating));
        let acts = o.handle_event(&id, Event::VnfmTerminationAck).unwrap();
        assert!(acts.contains(&Action::ConfirmTermination));
        assert_eq!(o.state(&id), Some(LifecycleState::Terminated));
        assert_eq!(o.catalogues().allocated(&id), 0);
        assert_eq!(&phases(&o, &id)[5..], ["3.1", "3.2", "3.4", "3.3", "3.5"]);
        for e in [Event::TerminationRequest, Event::VnfmTerminationAck, Event::OeDispatch] {
            assert!(o.handle_event(&id, e).is_err());
        }
    }

    fn report(delta_lost: u64) -> Vec<LinkObservation> {
        ["gs", "sat"]
            .iter()
            .zip(["sat", "ut"])
            .map(|(a, b)| LinkObservation { src: (*a).into(), dst: b.into(), sent: 1000, lost: delta_lost, timestamp: ts() })
            .collect()
    }

    #[test]
    fn steady_loss_keeps() {
        let mut o = orchestrator(0.1);
        let id = activate(&mut o);
        let p = o.monitoring_tick(&id, report(100)).unwrap();
        assert_eq!(p.decision, Decision::Keep);
        assert!((p.observed_loss - 0.1).abs() < 1e-12);
        assert_eq!(o.linkdb().link("gs", "sat").unwrap().samples, 1000);
    }

    #[test]
    fn loss_spike_recodes_to_exhaustive_argmax() {
        let mut o = orchestrator(0.05);
        let id = activate(&mut o);
        let n0 = o.catalogues().nfv_instances[&id].n;
        let mut p = o.monitoring_tick(&id, report(200)).unwrap();
        while p.decision == Decision::Keep {
            p = o.monitoring_tick(&id, report(200)).unwrap();
        }
        let Decision::Recode { n } = p.decision else { panic!("{p:?}") };
        assert!(p.reliability < 0.8 && n > n0);

        let cfg = OptimizerConfig { search: crate::optimizer::Search::Exhaustive, ..OptimizerConfig::default() };
        let route = o.linkdb().extract_path("gs", "ut").unwrap();
        let s = &o.catalogues().ns_catalog["backhaul"];
        let ex = optimize_rate(&Orchestrator::template(s).unwrap(), &route.profile, 0.8, &s.budget, &cfg).unwrap();
        assert_eq!(n, ex.point.n);
        assert_eq!(o.catalogues().nfv_instances[&id].n, n);
    }

    #[test]
    fn hopeless_loss_escalates() {
        let mut o = orchestrator(0.1);
        let id = activate(&mut o);
        let mut last = None;
        for _ in 0..10 {
            last = Some(o.monitoring_tick(&id, report(600)).unwrap());
        }
        assert_eq!(last.unwrap().decision, Decision::Escalate);
        assert_eq!(o.state(&id), Some(LifecycleState::Active));
    }

    #[test]
    fn bad_report_is_atomic() {
        let mut o = orchestrator(0.1);
        let id = activate(&mut o);
        let mut obs = report(100);
        obs[1].lost = 5000;
        let before = o.linkdb().persist();
        assert!(o.monitoring_tick(&id, obs).is_err());
        assert_eq!(o.linkdb().persist(), before);
    }

    #[test]
    fn log_is_json_lines() {
        let mut o = orchestrator(0.1);
        activate(&mut o);
        let mut buf = Vec::new();
        o.write_log(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["phase"], "1.1");
        assert_eq!(first["state_after"], "Requested");
        assert_eq!(first["t"], 1);
        assert_eq!(text.lines().count(), 5);
    }
}
