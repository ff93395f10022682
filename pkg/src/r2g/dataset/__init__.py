from .archive import (MAGIC, VERSION, dataset_stats, episode_id,
                      extract_action_chunks, list_episodes, read_episode,
                      write_episode)

__all__ = [
    "MAGIC", "VERSION", "dataset_stats", "episode_id", "extract_action_chunks",
    "list_episodes", "read_episode", "write_episode",
]
