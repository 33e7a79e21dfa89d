use crate::error::CapacityError;
use crate::partition::plan::TilePlan;
use crate::topology::PimTopology;

/// Checks every core's bank footprint (adjacency + replicated feature tile +
/// output partial) against `topo.bank_capacity`; reports the first offender.
pub fn validate_capacity(plan: &TilePlan, topo: &PimTopology) -> Result<(), CapacityError> {
    for (cluster, core) in plan.cores() {
        if core.bank_bytes() > topo.bank_capacity {
            return Err(CapacityError {
                device: cluster.device,
                cluster: cluster.index,
                core: core.id,
                adjacency_bytes: core.adjacency_bytes,
                feature_bytes: core.feature_bytes,
                output_bytes: core.output_bytes,
                capacity: topo.bank_capacity,
            });
        }
    }
    Ok(())
}

/// Bank check for a layout that replicates the whole `n x k` feature matrix
/// in every bank: only the replica is charged, the component that bounds the
/// supported graph size.
pub fn validate_feature_replica(
    n: usize,
    k: usize,
    elem_bytes: usize,
    topo: &PimTopology,
) -> Result<(), CapacityError> {
    let feature_bytes = n * k * elem_bytes;
    if feature_bytes > topo.bank_capacity {
        return Err(CapacityError {
            device: 0,
            cluster: 0,
            core: 0,
            adjacency_bytes: 0,
            feature_bytes,
            output_bytes: 0,
            capacity: topo.bank_capacity,
        });
    }
    Ok(())
}
