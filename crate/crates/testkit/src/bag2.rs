//! ROS2 bag directory writer: `metadata.yaml` plus one sqlite `.db3` file.

use std::path::Path;

use rusqlite::{params, Connection};

use crate::msgs::{cdr, Msg};

pub struct Bag2Writer {
    conn: Connection,
    topics: Vec<(String, String)>,
}

impl Bag2Writer {
    /// Creates `dir` with an empty database named after the directory.
    pub fn create(dir: &Path) -> rusqlite::Result<Self> {
        std::fs::create_dir_all(dir).expect("create bag dir");
        let name = dir.file_name().unwrap().to_string_lossy().into_owned();
        let conn = Connection::open(dir.join(format!("{name}_0.db3")))?;
        conn.execute_batch(
            "CREATE TABLE schema(schema_version INTEGER PRIMARY KEY, ros_distro TEXT NOT NULL);
             CREATE TABLE topics(id INTEGER PRIMARY KEY, name TEXT NOT NULL, type TEXT NOT NULL,
                 serialization_format TEXT NOT NULL, offered_qos_profiles TEXT NOT NULL);
             CREATE TABLE messages(id INTEGER PRIMARY KEY, topic_id INTEGER NOT NULL,
                 timestamp INTEGER NOT NULL, data BLOB NOT NULL);
             CREATE INDEX timestamp_idx ON messages (timestamp ASC);",
        )?;
        std::fs::write(
            dir.join("metadata.yaml"),
            format!("rosbag2_bagfile_information:\n  version: 5\n  storage_identifier: sqlite3\n  relative_file_paths:\n    - {name}_0.db3\n"),
        )
        .expect("write metadata");
        Ok(Self { conn, topics: Vec::new() })
    }

    pub fn topic(&mut self, name: &str, type_name: &str, serialization: &str) -> i64 {
        self.topics.push((name.into(), type_name.into()));
        let id = self.topics.len() as i64;
        self.conn
            .execute(
                "INSERT INTO topics(id, name, type, serialization_format, offered_qos_profiles) VALUES (?1, ?2, ?3, ?4, '')",
                params![id, name, type_name, serialization],
            )
            .expect("insert topic");
        id
    }

    pub fn message(&mut self, topic_id: i64, timestamp_ns: i64, data: &[u8]) {
        self.conn
            .execute(
                "INSERT INTO messages(topic_id, timestamp, data) VALUES (?1, ?2, ?3)",
                params![topic_id, timestamp_ns, data],
            )
            .expect("insert message");
    }

    pub fn msg(&mut self, topic_id: i64, timestamp_ns: i64, msg: &Msg) {
        self.message(topic_id, timestamp_ns, &cdr::encode(msg));
    }
}
