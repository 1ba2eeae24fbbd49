//! ROS2 bag directories: `metadata.yaml` plus one or more sqlite `.db3` files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rusqlite::{Connection, OpenFlags};

use super::{BagError, MessageLocator, RawMessage, RawTopicStream, Serialization};
use crate::detect::{files, has_ext};

fn sql(path: &Path) -> impl Fn(rusqlite::Error) -> BagError + '_ {
    move |e| BagError::Sqlite {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// The `.db3` files of a bag directory, in name order.
pub fn db_files(dir: &Path) -> Result<Vec<PathBuf>, BagError> {
    let listing = files(dir).map_err(|e| BagError::Read(format!("{}: {e}", dir.display())))?;
    if !listing.iter().any(|p| p.file_name().is_some_and(|n| n == "metadata.yaml")) {
        return Err(BagError::NotABagDirectory(dir.to_path_buf()));
    }
    let dbs: Vec<_> = listing.into_iter().filter(|p| has_ext(p, &["db3"])).collect();
    if dbs.is_empty() {
        return Err(BagError::NotABagDirectory(dir.to_path_buf()));
    }
    Ok(dbs)
}

fn open(path: &Path) -> Result<Connection, BagError> {
    let conn = Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX).map_err(sql(path))?;
    let mut stmt = conn
        .prepare("SELECT name FROM sqlite_master WHERE type = 'table'")
        .map_err(sql(path))?;
    let tables: Vec<String> = stmt
        .query_map([], |r| r.get(0))
        .map_err(sql(path))?
        .collect::<Result<_, _>>()
        .map_err(sql(path))?;
    drop(stmt);
    let missing: Vec<String> = ["topics", "messages"]
        .iter()
        .filter(|t| !tables.iter().any(|n| n == *t))
        .map(|t| t.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(BagError::MissingTables {
            path: path.to_path_buf(),
            missing,
        });
    }
    Ok(conn)
}

/// Reads every topic and message. Topics with the same name in several
/// database files are merged.
pub fn parse_ros2_bag(dir: &Path) -> Result<Vec<RawTopicStream>, BagError> {
    let mut streams: BTreeMap<String, RawTopicStream> = BTreeMap::new();
    for (file_index, path) in db_files(dir)?.iter().enumerate() {
        let conn = open(path)?;
        let mut ids = BTreeMap::new();
        {
            let mut stmt = conn
                .prepare("SELECT id, name, type, serialization_format FROM topics ORDER BY id")
                .map_err(sql(path))?;
            let rows = stmt
                .query_map([], |r| Ok((r.get::<_, i64>(0)?, r.get::<_, String>(1)?, r.get::<_, String>(2)?, r.get::<_, String>(3)?)))
                .map_err(sql(path))?;
            for row in rows {
                let (id, name, ty, ser) = row.map_err(sql(path))?;
                if ser != "cdr" {
                    return Err(BagError::NotCdr { topic: name, format: ser });
                }
                let s = streams.entry(name.clone()).or_insert_with(|| RawTopicStream {
                    topic: name.clone(),
                    type_name: ty.clone(),
                    serialization: Serialization::Cdr,
                    messages: Vec::new(),
                });
                if s.type_name != ty {
                    return Err(BagError::TypeConflict {
                        topic: name,
                        first: s.type_name.clone(),
                        second: ty,
                    });
                }
                ids.insert(id, name);
            }
        }
        let mut stmt = conn
            .prepare("SELECT id, topic_id, timestamp, data FROM messages ORDER BY timestamp, id")
            .map_err(sql(path))?;
        let rows = stmt
            .query_map([], |r| Ok((r.get::<_, i64>(0)?, r.get::<_, i64>(1)?, r.get::<_, i64>(2)?, r.get::<_, Vec<u8>>(3)?)))
            .map_err(sql(path))?;
        for row in rows {
            let (row_id, topic_id, ts, data) = row.map_err(sql(path))?;
            let topic = ids.get(&topic_id).ok_or(BagError::UnknownConnection(topic_id as u32))?;
            streams.get_mut(topic).unwrap().messages.push(RawMessage {
                receive_ns: ts,
                payload: data,
                locator: MessageLocator::Ros2 { file: file_index, row: row_id },
            });
        }
    }
    let mut out: Vec<_> = streams.into_values().collect();
    for s in &mut out {
        s.messages.sort_by_key(|m| m.receive_ns);
    }
    Ok(out)
}

/// Payload of one message row.
pub fn read_row(dir: &Path, file: usize, row: i64) -> Result<Vec<u8>, BagError> {
    let dbs = db_files(dir)?;
    let path = dbs.get(file).ok_or_else(|| BagError::NotABagDirectory(dir.to_path_buf()))?;
    let conn = open(path)?;
    conn.query_row("SELECT data FROM messages WHERE id = ?1", [row], |r| r.get(0))
        .map_err(sql(path))
}
