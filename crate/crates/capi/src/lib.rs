//! C ABI for the harmonic-games library.
//!
//! Conventions:
//!
//! * Games are opaque handles ([`HgGame`]) created by [`hg_game_from_json`]
//!   and released with [`hg_game_free`].
//! * Every fallible call returns an [`HgStatus`]; on failure,
//!   [`hg_last_error_message`] holds a thread-local description valid until
//!   the next failing call on the same thread.
//! * Structured results come back as JSON in newly allocated C strings that
//!   the caller must release with [`hg_string_free`].  The JSON schemas are
//!   the same documents the `hgames` CLI reads and writes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use harmonic_games::game::MixedProfile;
use harmonic_games::report::{
    analyze_game, execute_discrete, execute_flow, to_pretty_json, DiscreteRunConfig,
    FlowRunConfig, StructureJson,
};
use harmonic_games::{Error, FiniteGame};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    NotHarmonic = 5,
    NumericalError = 6,
    Diverged = 7,
    InternalPanic = 8,
}

/// Opaque game handle.
pub struct HgGame {
    inner: FiniteGame,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> HgStatus {
    match err {
        Error::Parse(_) => HgStatus::ParseError,
        Error::Invalid { .. }
        | Error::ShapeMismatch(_)
        | Error::NonPositiveWeight(_)
        | Error::NotNormalized(_)
        | Error::BoundaryPoint(_) => HgStatus::InvalidArgument,
        Error::NotApplicable(_) => HgStatus::NotHarmonic,
        Error::Numerical(_) => HgStatus::NumericalError,
        Error::NonFiniteState { .. } => HgStatus::Diverged,
        Error::Io(_) => HgStatus::InvalidArgument,
    }
}

fn fail(err: &Error) -> HgStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn guarded<F: FnOnce() -> HgStatus>(body: F) -> HgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            HgStatus::InternalPanic
        }
    }
}

/// # Safety
/// `ptr` must be null or a valid NUL-terminated string.
unsafe fn read_utf8<'a>(ptr: *const c_char) -> Result<&'a str, HgStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(HgStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        HgStatus::InvalidUtf8
    })
}

fn give_string(out: *mut *mut c_char, text: String) -> HgStatus {
    let c = match CString::new(text) {
        Ok(c) => c,
        Err(_) => {
            set_error("result contained an interior NUL byte");
            return HgStatus::InternalPanic;
        }
    };
    unsafe { *out = c.into_raw() };
    HgStatus::Ok
}

/// Message describing the most recent failure on this thread.  The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parse a game document (`{"players": N, "actions": [...], "payoffs":
/// [...]}`) into a new handle.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out_game` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_game_from_json(
    json: *const c_char,
    out_game: *mut *mut HgGame,
) -> HgStatus {
    guarded(|| {
        if out_game.is_null() {
            set_error("null output pointer");
            return HgStatus::NullPointer;
        }
        let text = match read_utf8(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match FiniteGame::from_json(text) {
            Ok(inner) => {
                *out_game = Box::into_raw(Box::new(HgGame { inner }));
                HgStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a game handle (null is a no-op).
///
/// # Safety
/// `game` must be null or a pointer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn hg_game_free(game: *mut HgGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Release a string returned by this library (null is a no-op).
///
/// # Safety
/// `text` must be null or a string pointer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn hg_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Number of players, or 0 for a null handle.
///
/// # Safety
/// `game` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn hg_game_num_players(game: *const HgGame) -> u32 {
    game.as_ref().map_or(0, |g| g.inner.num_players() as u32)
}

/// Copy per-player action counts into `buf` (length `len` >= num_players).
///
/// # Safety
/// `game` must be a valid handle and `buf` must point to `len` writable
/// entries.
#[no_mangle]
pub unsafe extern "C" fn hg_game_action_counts(
    game: *const HgGame,
    buf: *mut u32,
    len: usize,
) -> HgStatus {
    guarded(|| {
        let Some(g) = game.as_ref() else {
            set_error("null game handle");
            return HgStatus::NullPointer;
        };
        let counts = g.inner.action_counts();
        if buf.is_null() || len < counts.len() {
            set_error(&format!("buffer too small: need {}", counts.len()));
            return HgStatus::InvalidArgument;
        }
        for (k, &c) in counts.iter().enumerate() {
            *buf.add(k) = c as u32;
        }
        HgStatus::Ok
    })
}

/// Serialize the game back to its JSON document.
///
/// # Safety
/// `game` must be a valid handle and `out_json` a valid pointer; the result
/// must be released with [`hg_string_free`].
#[no_mangle]
pub unsafe extern "C" fn hg_game_to_json(
    game: *const HgGame,
    out_json: *mut *mut c_char,
) -> HgStatus {
    guarded(|| {
        let Some(g) = game.as_ref() else {
            set_error("null game handle");
            return HgStatus::NullPointer;
        };
        if out_json.is_null() {
            set_error("null output pointer");
            return HgStatus::NullPointer;
        }
        give_string(out_json, g.inner.to_json())
    })
}

/// Largest unilateral deviation gain at a mixed profile, passed as the
/// concatenation of per-player probability blocks (length = sum of action
/// counts).
///
/// # Safety
/// `game` must be a valid handle, `profile` must hold `len` doubles, and
/// `out_gap` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_nash_gap(
    game: *const HgGame,
    profile: *const f64,
    len: usize,
    out_gap: *mut f64,
) -> HgStatus {
    guarded(|| {
        let Some(g) = game.as_ref() else {
            set_error("null game handle");
            return HgStatus::NullPointer;
        };
        if profile.is_null() || out_gap.is_null() {
            set_error("null pointer argument");
            return HgStatus::NullPointer;
        }
        let counts = g.inner.action_counts();
        let need: usize = counts.iter().sum();
        if len != need {
            set_error(&format!("profile has {len} entries, expected {need}"));
            return HgStatus::InvalidArgument;
        }
        let flat = std::slice::from_raw_parts(profile, len);
        let mut blocks = Vec::with_capacity(counts.len());
        let mut at = 0;
        for &c in counts {
            blocks.push(flat[at..at + c].to_vec());
            at += c;
        }
        match MixedProfile::new(blocks).and_then(|x| g.inner.nash_gap(&x)) {
            Ok(gap) => {
                *out_gap = gap;
                HgStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Full analysis report as JSON: harmonic structure (or absence), uniform
/// flag, Lipschitz moduli, and admissible step sizes.
///
/// # Safety
/// `game` must be a valid handle and `out_json` a valid pointer; release
/// the result with [`hg_string_free`].
#[no_mangle]
pub unsafe extern "C" fn hg_analyze_json(
    game: *const HgGame,
    out_json: *mut *mut c_char,
) -> HgStatus {
    guarded(|| {
        let Some(g) = game.as_ref() else {
            set_error("null game handle");
            return HgStatus::NullPointer;
        };
        if out_json.is_null() {
            set_error("null output pointer");
            return HgStatus::NullPointer;
        }
        give_string(out_json, to_pretty_json(&analyze_game(&g.inner)))
    })
}

/// Sample a harmonic game.  `shape` holds `num_players` action counts;
/// `uniform_measure` nonzero uses the all-ones measure, zero draws random
/// canonical weights from the seed.  On success returns the game handle
/// plus the structure JSON.
///
/// # Safety
/// `shape` must hold `num_players` entries; `out_game` and `out_structure`
/// must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hg_generate_harmonic(
    shape: *const u32,
    num_players: usize,
    uniform_measure: i32,
    seed: u64,
    out_game: *mut *mut HgGame,
    out_structure: *mut *mut c_char,
) -> HgStatus {
    guarded(|| {
        if shape.is_null() || out_game.is_null() || out_structure.is_null() {
            set_error("null pointer argument");
            return HgStatus::NullPointer;
        }
        let counts: Vec<usize> = std::slice::from_raw_parts(shape, num_players)
            .iter()
            .map(|&c| c as usize)
            .collect();
        match harmonic_games::report::generate_with_structure(
            &counts,
            uniform_measure != 0,
            seed,
        ) {
            Ok((game, structure)) => {
                let json = to_pretty_json(&StructureJson::from_structure(&structure));
                *out_game = Box::into_raw(Box::new(HgGame { inner: game }));
                give_string(out_structure, json)
            }
            Err(e) => fail(&e),
        }
    })
}

/// Run a discrete experiment from a [`DiscreteRunConfig`] JSON document and
/// return the summary JSON.
///
/// # Safety
/// `game` must be a valid handle, `config_json` a valid string, and
/// `out_summary` a valid pointer; release the result with
/// [`hg_string_free`].
#[no_mangle]
pub unsafe extern "C" fn hg_run_discrete(
    game: *const HgGame,
    config_json: *const c_char,
    out_summary: *mut *mut c_char,
) -> HgStatus {
    guarded(|| {
        let Some(g) = game.as_ref() else {
            set_error("null game handle");
            return HgStatus::NullPointer;
        };
        if out_summary.is_null() {
            set_error("null output pointer");
            return HgStatus::NullPointer;
        }
        let text = match read_utf8(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let config: DiscreteRunConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => {
                set_error(&format!("config: {e}"));
                return HgStatus::ParseError;
            }
        };
        match execute_discrete(&g.inner, &config) {
            Ok(outcome) => give_string(out_summary, to_pretty_json(&outcome.summary)),
            Err(e) => fail(&e),
        }
    })
}

/// Integrate a continuous flow from a [`FlowRunConfig`] JSON document and
/// return the summary JSON.
///
/// # Safety
/// Same contracts as [`hg_run_discrete`].
#[no_mangle]
pub unsafe extern "C" fn hg_integrate_flow(
    game: *const HgGame,
    config_json: *const c_char,
    out_summary: *mut *mut c_char,
) -> HgStatus {
    guarded(|| {
        let Some(g) = game.as_ref() else {
            set_error("null game handle");
            return HgStatus::NullPointer;
        };
        if out_summary.is_null() {
            set_error("null output pointer");
            return HgStatus::NullPointer;
        }
        let text = match read_utf8(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let config: FlowRunConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => {
                set_error(&format!("config: {e}"));
                return HgStatus::ParseError;
            }
        };
        match execute_flow(&g.inner, &config) {
            Ok(outcome) => give_string(out_summary, to_pretty_json(&outcome.summary)),
            Err(e) => fail(&e),
        }
    })
}
