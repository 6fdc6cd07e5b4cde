#include "choicepred/io.hpp"

#include <fstream>

#include "choicepred/errors.hpp"

namespace choicepred {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path temp = path.string() + ".tmp";
    {
        std::ofstream out(temp);
        if (!out) throw DataError("cannot write file: " + path.string());
        out << content;
        out.close();
        if (!out) throw DataError("failed writing file: " + path.string());
    }
    std::filesystem::rename(temp, path);
}

}  // namespace choicepred
