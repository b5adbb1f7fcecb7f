//! HTTP/JSON service over scenes, sessions and the asset catalog.

mod error;
mod routes;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use axum::extract::Request;
use axum::middleware::{self, Next};
use axum::response::Response;
use axum::Router;
use echo_core::catalog::HashNgramEmbedder;
use echo_core::engine::{GenerationJob, Workbench};
use echo_core::pipeline::{AssetResolver, Provider};
use echo_core::Catalog;

pub use error::{ApiError, Body, Params};

use crate::store::{Store, StoreError};

/// One scene's workbench. `None` once the scene is deleted, so generation
/// tasks that finish afterwards find nothing to write to.
pub type SceneSlot = Arc<Mutex<Option<Workbench>>>;

pub struct AppState {
    store: Store,
    scenes: RwLock<BTreeMap<String, SceneSlot>>,
    provider: Arc<dyn Provider>,
    catalog: Arc<Catalog>,
    embedder: HashNgramEmbedder,
    generation_delay: Duration,
    admin_token: Option<String>,
}

/// What startup recovery found.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Recovery {
    pub scenes: usize,
    pub demoted: usize,
    pub repaired: Vec<String>,
}

pub struct ServiceOptions {
    pub store: Store,
    pub provider: Arc<dyn Provider>,
    pub catalog: Catalog,
    pub generation_delay: Duration,
    pub admin_token: Option<String>,
}

impl AppState {
    /// Loads every persisted scene; any unreadable file aborts startup.
    pub fn recover(opts: ServiceOptions) -> Result<(Arc<Self>, Recovery), StoreError> {
        let mut report = Recovery::default();
        let mut scenes = BTreeMap::new();
        for r in opts.store.load_all()? {
            let id = r.workbench.scene().scene_id().to_string();
            report.scenes += 1;
            report.demoted += r.demoted;
            if r.dropped_partial_line || r.rewrote_scene_file {
                report.repaired.push(id.clone());
            }
            scenes.insert(id, Arc::new(Mutex::new(Some(r.workbench))));
        }
        let state = Self {
            store: opts.store,
            scenes: RwLock::new(scenes),
            provider: opts.provider,
            catalog: Arc::new(opts.catalog),
            embedder: HashNgramEmbedder,
            generation_delay: opts.generation_delay,
            admin_token: opts.admin_token,
        };
        Ok((Arc::new(state), report))
    }

    pub fn scene_ids(&self) -> Vec<String> {
        self.scenes
            .read()
            .expect("scene map lock")
            .keys()
            .cloned()
            .collect()
    }

    fn slot(&self, scene_id: &str) -> Result<SceneSlot, ApiError> {
        self.scenes
            .read()
            .expect("scene map lock")
            .get(scene_id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no scene {scene_id:?}")))
    }

    /// Runs `f` as the scene's single writer and persists whatever it logged.
    fn write<T>(
        &self,
        scene_id: &str,
        session_id: Option<&str>,
        f: impl FnOnce(&mut Workbench) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let slot = self.slot(scene_id)?;
        let mut guard = slot.lock().expect("scene lock");
        let wb = guard
            .as_mut()
            .ok_or_else(|| ApiError::not_found(format!("no scene {scene_id:?}")))?;
        let log_from = wb.log().len();
        let out = f(wb);
        // Failed operations can still log (a rolled-back apply), so persist
        // either way.
        if wb.log().len() > log_from || out.is_ok() {
            self.store.commit(wb, log_from, session_id)?;
        }
        out
    }

    fn read<T>(&self, scene_id: &str, f: impl FnOnce(&Workbench) -> T) -> Result<T, ApiError> {
        let slot = self.slot(scene_id)?;
        let guard = slot.lock().expect("scene lock");
        let wb = guard
            .as_ref()
            .ok_or_else(|| ApiError::not_found(format!("no scene {scene_id:?}")))?;
        Ok(f(wb))
    }

    /// Generates actions for `jobs` in the background, one blocking task each.
    fn spawn_generation(self: &Arc<Self>, scene_id: String, jobs: Vec<GenerationJob>) {
        for job in jobs {
            let state = Arc::clone(self);
            let scene_id = scene_id.clone();
            tokio::task::spawn_blocking(move || {
                if !state.generation_delay.is_zero() {
                    std::thread::sleep(state.generation_delay);
                }
                let resolver = AssetResolver {
                    catalog: &state.catalog,
                    embedder: &state.embedder,
                };
                let result = job.run(state.provider.as_ref(), Some(&resolver));
                let session_id = result.session_id.clone();
                let landed = state.write(&scene_id, Some(&session_id), |wb| {
                    wb.complete_generation(result).map_err(ApiError::from)
                });
                if let Err(e) = landed {
                    tracing::warn!(scene = %scene_id, session = %session_id, error = %e.message, "generation result dropped");
                }
            });
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    routes::routes()
        .fallback(routes::not_found)
        .method_not_allowed_fallback(routes::method_not_allowed)
        .layer(middleware::from_fn(log_requests))
        .with_state(state)
}

async fn log_requests(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let start = Instant::now();
    let response = next.run(req).await;
    tracing::info!(
        %method,
        %path,
        status = response.status().as_u16(),
        elapsed_ms = start.elapsed().as_millis() as u64,
        "request"
    );
    response
}
