/// Splits `files` into upload batches.
///
/// Single-picture mode sends one file per call. In multi-picture mode the
/// pool size is the task's own, else the job-wide one, else the worker's.
pub fn make_batches<T: Clone>(
    files: &[T],
    multi_pic: bool,
    task_pool: Option<u32>,
    global_pool: Option<u32>,
    worker_default: u32,
) -> Vec<Vec<T>> {
    let pool = if multi_pic {
        task_pool.or(global_pool).unwrap_or(worker_default).max(1) as usize
    } else {
        1
    };
    files.chunks(pool).map(<[T]>::to_vec).collect()
}
