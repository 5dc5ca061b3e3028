mod common;

use common::{oracle_paths, oracle_permissions, oracle_witness, random_policy, Shape};
use hyperpam::hypergraph::Permission;
use hyperpam::query::{
    check_privilege, effective_permissions, find_access_paths, validate_path, PrivilegeQuery,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn check_matches_exhaustive_enumeration(seed in any::<u64>()) {
        let rp = random_policy(seed, Shape::default());
        let p = &rp.policy;
        for ctx in &rp.contexts {
            for &u in &rp.users {
                for &r in &rp.resources {
                    for op in 0..4u8 {
                        let op = Permission(op);
                        let q = PrivilegeQuery::new(u, op, r, ctx.clone());
                        let d = check_privilege(p, &q, rp.max_depth).unwrap();
                        let paths = oracle_paths(p, u, op, r, ctx, rp.max_depth);
                        prop_assert_eq!(d.allowed, !paths.is_empty());
                        prop_assert_eq!(d.witness.as_ref(), oracle_witness(&paths));
                        if let Some(w) = &d.witness {
                            prop_assert_eq!(validate_path(p, &q, w, rp.max_depth), Ok(()));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn effective_permissions_are_the_union_over_ops(seed in any::<u64>()) {
        let rp = random_policy(seed, Shape::default());
        let ctx = &rp.contexts[0];
        for &u in &rp.users {
            for &r in &rp.resources {
                let eff = effective_permissions(&rp.policy, u, r, ctx, rp.max_depth).unwrap();
                prop_assert_eq!(eff, oracle_permissions(&rp.policy, u, r, ctx, rp.max_depth));
            }
        }
    }

    #[test]
    fn path_enumeration_matches_oracle(seed in any::<u64>()) {
        let rp = random_policy(seed, Shape::default());
        let ctx = &rp.contexts[1];
        for &u in &rp.users {
            for &r in &rp.resources {
                let q = PrivilegeQuery::new(u, Permission(0), r, ctx.clone());
                let set = find_access_paths(&rp.policy, &q, rp.max_depth, 10_000).unwrap();
                let want = oracle_paths(&rp.policy, u, Permission(0), r, ctx, rp.max_depth);
                prop_assert!(!set.truncated);
                prop_assert_eq!(set.paths, want);
            }
        }
    }

    #[test]
    fn more_depth_never_removes_access(seed in any::<u64>()) {
        let rp = random_policy(seed, Shape::default());
        let ctx = &rp.contexts[0];
        for &u in &rp.users {
            for &r in &rp.resources {
                let q = PrivilegeQuery::new(u, Permission(1), r, ctx.clone());
                let shallow = check_privilege(&rp.policy, &q, rp.max_depth).unwrap();
                let deep = check_privilege(&rp.policy, &q, rp.max_depth + 2).unwrap();
                prop_assert!(!shallow.allowed || deep.allowed);
                if let (Some(a), Some(b)) = (&shallow.witness, &deep.witness) {
                    prop_assert!(b.len() <= a.len());
                }
            }
        }
    }
}
